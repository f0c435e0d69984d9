#include "das/model_json.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

namespace das {

using nlohmann::json;

namespace {

json value_to_json(const Value& v) {
  if (v.is_sym()) return v.sym();
  return v.vec();
}

Value value_from_json(const json& j) {
  if (j.is_number_integer()) return Value::sym(j.get<std::int64_t>());
  return Value::vec(j.get<Vec>());
}

bool tabulatable(const CausalModel& m, const std::string& id) {
  if (m.var(id).domain.kind != Domain::Kind::Finite) return false;
  for (const auto& p : m.parents(id))
    if (m.var(p).domain.kind != Domain::Kind::Finite) return false;
  return true;
}

}  // namespace

std::string model_to_json(const CausalModel& model) {
  json doc;
  doc["format"] = "das-causal-model";
  doc["version"] = 1;
  json vars = json::array();
  json parents = json::object();
  json mechanisms = json::object();

  for (const auto& v : model.variables()) {
    json jv;
    jv["id"] = v.id;
    jv["kind"] = var_kind_name(v.kind);
    if (v.domain.kind == Domain::Kind::Finite) {
      json vals = json::array();
      for (const auto& val : v.domain.values) vals.push_back(value_to_json(val));
      jv["domain"] = {{"finite", vals}};
    } else {
      jv["domain"] = {{"vector", v.domain.dim}};
    }
    vars.push_back(jv);

    if (v.kind == VarKind::Input) continue;
    parents[v.id] = model.parents(v.id);

    if (!tabulatable(model, v.id)) {
      mechanisms[v.id] = "opaque";
      continue;
    }
    // Enumerate all parent-domain index combinations.
    const auto& ps = model.parents(v.id);
    std::vector<std::size_t> card;
    for (const auto& p : ps) card.push_back(model.var(p).domain.values.size());
    json table = json::array();
    std::vector<std::size_t> idx(ps.size(), 0);
    for (;;) {
      std::vector<Value> args;
      json jargs = json::array();
      for (std::size_t i = 0; i < ps.size(); ++i) {
        args.push_back(model.var(ps[i]).domain.values[idx[i]]);
        jargs.push_back(idx[i]);
      }
      table.push_back({{"args", jargs}, {"value", value_to_json(model.mechanism(v.id)(args))}});
      std::size_t k = ps.size();
      bool carry = true;
      while (k > 0 && carry) {
        --k;
        if (++idx[k] < card[k]) carry = false;
        else idx[k] = 0;
      }
      if (ps.empty() || carry) break;
    }
    mechanisms[v.id] = {{"table", table}};
  }

  doc["variables"] = vars;
  doc["parents"] = parents;
  doc["mechanisms"] = mechanisms;
  return doc.dump(2);
}

CausalModel model_from_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.value("format", "") != "das-causal-model")
    fail(Errc::Io, "not a das-causal-model document");
  CausalModel m;
  for (const auto& jv : doc.at("variables")) {
    Variable v;
    v.id = jv.at("id").get<std::string>();
    const std::string kind = jv.at("kind").get<std::string>();
    v.kind = kind == "input"          ? VarKind::Input
             : kind == "intermediate" ? VarKind::Intermediate
                                      : VarKind::Output;
    const json& dom = jv.at("domain");
    if (dom.contains("finite")) {
      std::vector<Value> vals;
      for (const auto& x : dom.at("finite")) vals.push_back(value_from_json(x));
      v.domain = Domain::finite(std::move(vals));
    } else {
      v.domain = Domain::vector(dom.at("vector").get<std::size_t>());
    }

    std::vector<std::string> parents;
    Mechanism mech;
    if (v.kind != VarKind::Input) {
      parents = doc.at("parents").at(v.id).get<std::vector<std::string>>();
      const json& jm = doc.at("mechanisms").at(v.id);
      if (jm.is_string()) {
        const std::string id = v.id;
        mech = [id](const std::vector<Value>&) -> Value {
          fail(Errc::Config, "mechanism of '" + id + "' is opaque in this document");
        };
      } else {
        // Table lookup keyed by parent domain indices.
        std::vector<std::size_t> card;
        for (const auto& p : parents) {
          // Parents were declared earlier; read their domain sizes from m.
          card.push_back(m.var(p).domain.kind == Domain::Kind::Finite
                             ? m.var(p).domain.values.size()
                             : 0);
        }
        auto table = std::make_shared<std::map<std::vector<std::size_t>, Value>>();
        for (const auto& row : jm.at("table")) {
          (*table)[row.at("args").get<std::vector<std::size_t>>()] =
              value_from_json(row.at("value"));
        }
        // Capture parent domains to translate values back to indices.
        auto domains = std::make_shared<std::vector<Domain>>();
        for (const auto& p : parents) domains->push_back(m.var(p).domain);
        const std::string id = v.id;
        mech = [table, domains, id](const std::vector<Value>& args) -> Value {
          std::vector<std::size_t> key;
          key.reserve(args.size());
          for (std::size_t i = 0; i < args.size(); ++i) {
            const auto& vals = (*domains)[i].values;
            std::size_t pos = vals.size();
            for (std::size_t k = 0; k < vals.size(); ++k)
              if (vals[k] == args[i]) {
                pos = k;
                break;
              }
            if (pos == vals.size())
              fail(Errc::DomainError, "argument not in parent domain of '" + id + "'");
            key.push_back(pos);
          }
          auto it = table->find(key);
          if (it == table->end())
            fail(Errc::DomainError, "no table row for arguments of '" + id + "'");
          return it->second;
        };
      }
    }
    m.add_variable(std::move(v), std::move(parents), std::move(mech));
  }
  m.finish();
  return m;
}

void save_model_json(const std::string& path, const CausalModel& model) {
  std::ofstream f(path);
  if (!f) fail(Errc::Io, "cannot open '" + path + "' for writing");
  f << model_to_json(model) << '\n';
}

CausalModel load_model_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::Io, "cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace das
