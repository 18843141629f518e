#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "agentsim/env/fs_world.hpp"
#include "agentsim/env/world.hpp"

namespace agentsim {

// Shared machinery for record-store workloads. Fixture schema:
//   data.stores: {store name: [records]}, data.params: workload knobs,
//   data.rules: RuleSet entries.
class TableWorld : public World {
public:
    TableWorld(const ScenarioFixture& fixture, const std::string& expected_workload)
        : workload_(expected_workload) {
        if (fixture.workload != expected_workload)
            throw ConfigError("fixture is for workload " + fixture.workload + ", expected " +
                              expected_workload);
        stores_ = fixture.data.value("stores", json::object());
        params_ = fixture.data.value("params", json::object());
        rules_ = RuleSet::from_json(fixture.data.value("rules", json::array()));
    }

    const std::string& workload() const override { return workload_; }
    const ToolRegistry& registry() const override { return registry_; }
    const RuleSet& rules() const override { return rules_; }
    json canonical_state() const override { return json{{"stores", stores_}}; }

    const json* store(const std::string& name) const override {
        if (!stores_.contains(name)) return nullptr;
        return &stores_[name];
    }

protected:
    const json* record_in(const std::string& store, const std::string& id_field, const json& id) const {
        return find_record(store_view(), store, id_field, id);
    }
    json* record_in_mutable(const std::string& store, const std::string& id_field, const json& id) {
        if (!stores_.contains(store)) return nullptr;
        for (auto& record : stores_[store])
            if (record.is_object() && record.value(id_field, json()) == id) return &record;
        return nullptr;
    }

    // Picks records matching every (field, value) filter, preserving store order.
    json select(const std::string& store, const json& filters) const {
        json out = json::array();
        if (!stores_.contains(store)) return out;
        for (const auto& record : stores_[store]) {
            bool ok = true;
            for (const auto& [field, value] : filters.items())
                if (record.value(field, json()) != value) ok = false;
            if (ok) out.push_back(record);
        }
        return out;
    }

    static json page_slice(const json& records, std::int64_t page, std::int64_t page_size) {
        json out = json::array();
        const std::int64_t begin = (page - 1) * page_size;
        for (std::int64_t i = begin;
             i < std::min<std::int64_t>(begin + page_size, static_cast<std::int64_t>(records.size()));
             ++i)
            out.push_back(records[i]);
        return out;
    }

    std::int64_t page_size() const { return params_.value("page_size", 10); }

    ToolSpec make_tool(const std::string& name, const std::string& desc,
                       std::map<std::string, ParamSpec> params) const {
        ToolSpec spec;
        spec.name = name;
        spec.description = desc;
        spec.parameters = std::move(params);
        return spec;
    }

    void add_submit_tool() {
        ToolSpec submit = make_tool("submit_answer", "Deliver the final answer.",
                                    {{"answer", {"string", false}}, {"value", {"number", false}}});
        registry_.add(submit);
    }

    std::string workload_;
    json stores_;
    json params_;
    ToolRegistry registry_;
    RuleSet rules_;
};

// Patients with paginated medical records. Results are truncated to the page
// size by default; only the middleware lookahead reveals totals.
class MedicalWorld : public TableWorld {
public:
    explicit MedicalWorld(const ScenarioFixture& fixture) : TableWorld(fixture, "medical") {
        ToolSpec get_patient = make_tool("get_patient", "Look up a patient by exact name.",
                                         {{"name", {"string", true}}});
        get_patient.exploration = true;
        registry_.add(get_patient);
        ToolSpec get_records = make_tool(
            "get_records", "Fetch one page of a patient's records (page defaults to 1).",
            {{"patient_id", {"string", true}}, {"page", {"integer", false}}});
        get_records.exploration = true;
        get_records.paginated = true;
        registry_.add(get_records);
        ToolSpec lookup = make_tool("lookup_code", "Resolve a vital/lab name to its record code.",
                                    {{"vital", {"string", true}}});
        lookup.exploration = true;
        registry_.add(lookup);
        ToolSpec post = make_tool(
            "post_order", "File a medical order for a patient.",
            {{"patient_id", {"string", true}}, {"order_type", {"string", true}}, {"value", {"number", true}}});
        post.mutating = true;
        registry_.add(post);
        add_submit_tool();
    }

    json invoke_tool(const std::string& tool, const json& args) override {
        if (tool == "get_patient") {
            const std::string name = args.at("name").get<std::string>();
            for (const auto& p : stores_["patients"])
                if (p.value("name", std::string()) == name) return p;
            throw ToolFault{"no patient named: " + name};
        }
        if (tool == "get_records") {
            const json id = args.at("patient_id");
            if (!record_in("patients", "patient_id", id))
                throw ToolFault{"no such patient: " + id.dump()};
            const std::int64_t page = args.value("page", 1);
            if (page < 1) throw ToolFault{"page must be >= 1"};
            const json all = select("records", json{{"patient_id", id}});
            return json{{"records", page_slice(all, page, page_size())}, {"page", page}};
        }
        if (tool == "lookup_code") {
            const std::string vital = args.at("vital").get<std::string>();
            const json codes = params_.value("codes", json::object());
            if (!codes.contains(vital)) throw ToolFault{"unknown vital: " + vital};
            return json{{"code", codes[vital]}};
        }
        if (tool == "post_order") {
            const json id = args.at("patient_id");
            if (!record_in("patients", "patient_id", id))
                throw ToolFault{"no such patient: " + id.dump()};
            json order{{"patient_id", id},
                       {"order_type", args.at("order_type")},
                       {"value", args.at("value")}};
            for (const auto& existing : stores_["orders"])
                if (existing == order) throw ToolFault{"operation has no effect: duplicate order"};
            stores_["orders"].push_back(order);
            return json{{"filed", order}};
        }
        if (tool == "submit_answer") return json{{"recorded", args}};
        throw ToolFault{"unknown tool: " + tool};
    }

    std::optional<PageInfo> page_info(const std::string& tool, const json& args) const override {
        if (tool != "get_records" || !args.is_object() || !args.contains("patient_id"))
            return std::nullopt;
        const json all = select("records", json{{"patient_id", args["patient_id"]}});
        PageInfo info;
        info.total = static_cast<std::int64_t>(all.size());
        const std::int64_t page = args.value("page", 1);
        info.retrieved = std::min<std::int64_t>(page * page_size(), info.total);
        return info;
    }
};

// Users, orders with nested items, and a paginated product catalog.
class RetailWorld : public TableWorld {
public:
    explicit RetailWorld(const ScenarioFixture& fixture) : TableWorld(fixture, "retail") {
        ToolSpec profile = make_tool("get_user_profile", "Look up a user by email.",
                                     {{"email", {"string", true}}});
        profile.exploration = true;
        registry_.add(profile);
        ToolSpec orders = make_tool("get_user_orders", "List a user's orders.",
                                    {{"user_id", {"string", true}}});
        orders.exploration = true;
        registry_.add(orders);
        ToolSpec details = make_tool("get_order_details", "Fetch one order with its items.",
                                     {{"order_id", {"string", true}}});
        details.exploration = true;
        registry_.add(details);
        ToolSpec products = make_tool(
            "list_products", "One page of the catalog for a category (page defaults to 1).",
            {{"category", {"string", true}}, {"page", {"integer", false}}});
        products.exploration = true;
        products.paginated = true;
        registry_.add(products);
        ToolSpec ret = make_tool("return_item", "Return an item from an order.",
                                 {{"order_id", {"string", true}}, {"item_id", {"string", true}}});
        ret.mutating = true;
        registry_.add(ret);
        ToolSpec exch = make_tool("exchange_item", "Exchange an order item for another product.",
                                  {{"order_id", {"string", true}},
                                   {"item_id", {"string", true}},
                                   {"new_product_id", {"string", true}}});
        exch.mutating = true;
        registry_.add(exch);
        ToolSpec cancel = make_tool("cancel_order", "Cancel a pending order.",
                                    {{"order_id", {"string", true}}});
        cancel.mutating = true;
        registry_.add(cancel);
        add_submit_tool();
    }

    json invoke_tool(const std::string& tool, const json& args) override {
        if (tool == "get_user_profile") {
            const std::string email = args.at("email").get<std::string>();
            for (const auto& u : stores_["users"])
                if (u.value("email", std::string()) == email) return u;
            throw ToolFault{"no user with email: " + email};
        }
        if (tool == "get_user_orders") {
            const json id = args.at("user_id");
            if (!record_in("users", "user_id", id)) throw ToolFault{"no such user: " + id.dump()};
            json out = json::array();
            for (const auto& o : select("orders", json{{"user_id", id}})) {
                json summary = o;
                summary.erase("items");
                out.push_back(summary);
            }
            return json{{"orders", out}};
        }
        if (tool == "get_order_details") {
            const json* order = record_in("orders", "order_id", args.at("order_id"));
            if (!order) throw ToolFault{"no such order: " + args["order_id"].dump()};
            return *order;
        }
        if (tool == "list_products") {
            const json matching = select("products", json{{"category", args.at("category")}});
            if (matching.empty())
                throw ToolFault{"no such category: " + args["category"].get<std::string>()};
            const std::int64_t page = args.value("page", 1);
            if (page < 1) throw ToolFault{"page must be >= 1"};
            return json{{"products", page_slice(matching, page, page_size())}, {"page", page}};
        }
        if (tool == "return_item") {
            json* order = record_in_mutable("orders", "order_id", args.at("order_id"));
            if (!order) throw ToolFault{"no such order: " + args["order_id"].dump()};
            for (auto& item : (*order)["items"]) {
                if (item.value("item_id", json()) != args.at("item_id")) continue;
                if (item.value("returned", false))
                    throw ToolFault{"operation has no effect: item already returned"};
                item["returned"] = true;
                return json{{"returned", args.at("item_id")}, {"order_id", args.at("order_id")}};
            }
            throw ToolFault{"no such item in order: " + args["item_id"].dump()};
        }
        if (tool == "exchange_item") {
            json* order = record_in_mutable("orders", "order_id", args.at("order_id"));
            if (!order) throw ToolFault{"no such order: " + args["order_id"].dump()};
            if (!record_in("products", "product_id", args.at("new_product_id")))
                throw ToolFault{"no such product: " + args["new_product_id"].dump()};
            for (auto& item : (*order)["items"]) {
                if (item.value("item_id", json()) != args.at("item_id")) continue;
                if (item.value("product_id", json()) == args.at("new_product_id"))
                    throw ToolFault{"operation has no effect: same product"};
                item["product_id"] = args.at("new_product_id");
                return json{{"exchanged", args.at("item_id")},
                            {"new_product_id", args.at("new_product_id")}};
            }
            throw ToolFault{"no such item in order: " + args["item_id"].dump()};
        }
        if (tool == "cancel_order") {
            json* order = record_in_mutable("orders", "order_id", args.at("order_id"));
            if (!order) throw ToolFault{"no such order: " + args["order_id"].dump()};
            if ((*order)["status"] == "cancelled")
                throw ToolFault{"operation has no effect: order already cancelled"};
            (*order)["status"] = "cancelled";
            return json{{"cancelled", args.at("order_id")}};
        }
        if (tool == "submit_answer") return json{{"recorded", args}};
        throw ToolFault{"unknown tool: " + tool};
    }

    std::optional<PageInfo> page_info(const std::string& tool, const json& args) const override {
        if (tool != "list_products" || !args.is_object() || !args.contains("category"))
            return std::nullopt;
        const json matching = select("products", json{{"category", args["category"]}});
        if (matching.empty()) return std::nullopt;
        PageInfo info;
        info.total = static_cast<std::int64_t>(matching.size());
        info.retrieved = std::min<std::int64_t>(args.value("page", 1) * page_size(), info.total);
        return info;
    }
};

// Support cases with filterable retrieval and an averaging helper.
class CrmWorld : public TableWorld {
public:
    explicit CrmWorld(const ScenarioFixture& fixture) : TableWorld(fixture, "crm") {
        ToolSpec get_cases = make_tool(
            "get_cases", "Retrieve cases, optionally filtered by assignee and status.",
            {{"assigned_to", {"string", false}}, {"status", {"string", false}}});
        get_cases.exploration = true;
        registry_.add(get_cases);
        ToolSpec avg = make_tool("calculate_avg", "Average a list of numbers.",
                                 {{"values", {"array", true}}});
        registry_.add(avg);
        ToolSpec shipping = make_tool("get_shipping_state", "Shipping state of one case.",
                                      {{"case_id", {"string", true}}});
        shipping.exploration = true;
        registry_.add(shipping);
        ToolSpec update = make_tool("update_case", "Set a case's status.",
                                    {{"case_id", {"string", true}}, {"status", {"string", true}}});
        update.mutating = true;
        registry_.add(update);
        add_submit_tool();
    }

    json invoke_tool(const std::string& tool, const json& args) override {
        if (tool == "get_cases") {
            json filters = json::object();
            if (args.contains("assigned_to")) filters["assigned_to"] = args["assigned_to"];
            if (args.contains("status")) filters["status"] = args["status"];
            return json{{"cases", select("cases", filters)}};
        }
        if (tool == "calculate_avg") {
            const json& values = args.at("values");
            if (values.empty()) throw ToolFault{"values must be non-empty"};
            double sum = 0;
            for (const auto& v : values) {
                if (!v.is_number()) throw ToolFault{"values must be numbers"};
                sum += v.get<double>();
            }
            return json{{"average", sum / static_cast<double>(values.size())}};
        }
        if (tool == "get_shipping_state") {
            const json* c = record_in("cases", "case_id", args.at("case_id"));
            if (!c) throw ToolFault{"no such case: " + args["case_id"].dump()};
            return json{{"case_id", args.at("case_id")}, {"shipping_state", c->value("shipping_state", json())}};
        }
        if (tool == "update_case") {
            json* c = record_in_mutable("cases", "case_id", args.at("case_id"));
            if (!c) throw ToolFault{"no such case: " + args["case_id"].dump()};
            if ((*c)["status"] == args.at("status"))
                throw ToolFault{"operation has no effect: status unchanged"};
            (*c)["status"] = args.at("status");
            return json{{"case_id", args.at("case_id")}, {"status", args.at("status")}};
        }
        if (tool == "submit_answer") return json{{"recorded", args}};
        throw ToolFault{"unknown tool: " + tool};
    }
};

// Users, reservations, flights; modification policy comes from the rule set.
class AirlineWorld : public TableWorld {
public:
    explicit AirlineWorld(const ScenarioFixture& fixture) : TableWorld(fixture, "airline") {
        ToolSpec user = make_tool("get_user_details", "Look up a user by id.",
                                  {{"user_id", {"string", true}}});
        user.exploration = true;
        registry_.add(user);
        ToolSpec res = make_tool("get_reservations", "List a user's reservations.",
                                 {{"user_id", {"string", true}}});
        res.exploration = true;
        registry_.add(res);
        ToolSpec search = make_tool("search_direct_flight", "Direct flights between two airports.",
                                    {{"origin", {"string", true}}, {"destination", {"string", true}}});
        search.exploration = true;
        registry_.add(search);
        ToolSpec modify = make_tool(
            "modify_reservation", "Rebook a reservation onto another flight.",
            {{"reservation_id", {"string", true}}, {"new_flight_id", {"string", true}}});
        modify.mutating = true;
        registry_.add(modify);
        ToolSpec cancel = make_tool("cancel_reservation", "Cancel a reservation.",
                                    {{"reservation_id", {"string", true}}});
        cancel.mutating = true;
        registry_.add(cancel);
        add_submit_tool();
    }

    json invoke_tool(const std::string& tool, const json& args) override {
        if (tool == "get_user_details") {
            const json* u = record_in("users", "user_id", args.at("user_id"));
            if (!u) throw ToolFault{"no such user: " + args["user_id"].dump()};
            return *u;
        }
        if (tool == "get_reservations") {
            if (!record_in("users", "user_id", args.at("user_id")))
                throw ToolFault{"no such user: " + args["user_id"].dump()};
            return json{{"reservations", select("reservations", json{{"user_id", args["user_id"]}})}};
        }
        if (tool == "search_direct_flight") {
            const json matching = select(
                "flights",
                json{{"origin", args.at("origin")}, {"destination", args.at("destination")}});
            return json{{"flights", matching}};
        }
        if (tool == "modify_reservation") {
            json* r = record_in_mutable("reservations", "reservation_id", args.at("reservation_id"));
            if (!r) throw ToolFault{"no such reservation: " + args["reservation_id"].dump()};
            if (!record_in("flights", "flight_id", args.at("new_flight_id")))
                throw ToolFault{"no such flight: " + args["new_flight_id"].dump()};
            if ((*r)["flight_id"] == args.at("new_flight_id"))
                throw ToolFault{"operation has no effect: already on that flight"};
            (*r)["flight_id"] = args.at("new_flight_id");
            return json{{"reservation_id", args.at("reservation_id")},
                        {"flight_id", args.at("new_flight_id")}};
        }
        if (tool == "cancel_reservation") {
            json* r = record_in_mutable("reservations", "reservation_id", args.at("reservation_id"));
            if (!r) throw ToolFault{"no such reservation: " + args["reservation_id"].dump()};
            if ((*r)["status"] == "cancelled")
                throw ToolFault{"operation has no effect: reservation already cancelled"};
            (*r)["status"] = "cancelled";
            return json{{"cancelled", args.at("reservation_id")}};
        }
        if (tool == "submit_answer") return json{{"recorded", args}};
        throw ToolFault{"unknown tool: " + tool};
    }
};

inline std::unique_ptr<World> make_world(const ScenarioFixture& fixture, std::uint64_t seed = 0) {
    std::unique_ptr<World> world;
    if (fixture.workload == "file_system") {
        world = std::make_unique<FsWorld>(fixture);
    } else if (fixture.workload == "medical") {
        world = std::make_unique<MedicalWorld>(fixture);
    } else if (fixture.workload == "retail") {
        world = std::make_unique<RetailWorld>(fixture);
    } else if (fixture.workload == "crm") {
        world = std::make_unique<CrmWorld>(fixture);
    } else if (fixture.workload == "airline") {
        world = std::make_unique<AirlineWorld>(fixture);
    } else {
        throw ConfigError("unknown workload: " + fixture.workload);
    }
    world->seed = seed;
    return world;
}

}  // namespace agentsim
