#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "priomarket/equilibrium.hpp"
#include "priomarket/isp_optimizer.hpp"
#include "priomarket/oracle.hpp"
#include "priomarket/scenario.hpp"
#include "priomarket/sweep.hpp"
#include "priomarket/welfare.hpp"

namespace py = pybind11;
using namespace priomarket;

namespace {

DelayProfile delays_or_default(const MarketParams& params, const std::optional<std::vector<double>>& d,
                               bool allow_throttling) {
    if (!d) return DelayProfile::uniform(params);
    return DelayProfile{*d, allow_throttling};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Paid-prioritization market: equilibrium, ISP offers, welfare and oracle";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<RegimeError>(m, "RegimeError", PyExc_RuntimeError);

    py::class_<MarketParams>(m, "MarketParams")
        .def(py::init<>())
        .def(py::init([](double V, double t, double theta, double delta, double lambda_, double F,
                         int M, double d0) {
                 return MarketParams{V, t, theta, delta, lambda_, F, M, d0};
             }),
             py::arg("V") = 100.0, py::arg("t") = 500.0, py::arg("theta") = 0.5,
             py::arg("delta") = 0.5, py::arg("lambda_") = 5.0, py::arg("F") = 33.0,
             py::arg("M") = 6, py::arg("d0") = 6.0)
        .def_readwrite("V", &MarketParams::V)
        .def_readwrite("t", &MarketParams::t)
        .def_readwrite("theta", &MarketParams::theta)
        .def_readwrite("delta", &MarketParams::delta)
        .def_readwrite("lambda_", &MarketParams::lambda)
        .def_readwrite("F", &MarketParams::F)
        .def_readwrite("M", &MarketParams::M)
        .def_readwrite("d0", &MarketParams::d0)
        .def("validate", &MarketParams::validate);

    py::class_<CPProfile>(m, "CPProfile")
        .def(py::init([](int index, double S, double r, bool z) { return CPProfile{index, S, r, z}; }),
             py::arg("index"), py::arg("S"), py::arg("r"), py::arg("z") = false)
        .def_readwrite("index", &CPProfile::index)
        .def_readwrite("S", &CPProfile::S)
        .def_readwrite("r", &CPProfile::r)
        .def_readwrite("z", &CPProfile::z)
        .def("__repr__", [](const CPProfile& c) {
            return "CPProfile(index=" + std::to_string(c.index) + ", S=" + format_number(c.S) +
                   ", r=" + format_number(c.r) + ")";
        });

    m.def("uniform_cps", &uniform_cps, py::arg("params"), py::arg("S"), py::arg("r"));

    py::class_<CostModel>(m, "CostModel")
        .def_static("reciprocal", &CostModel::reciprocal, py::arg("c"))
        .def_readwrite("c", &CostModel::c)
        .def("cost", &CostModel::cost, py::arg("d"), py::arg("d0"))
        .def("derivative", &CostModel::derivative, py::arg("d"), py::arg("d0"));

    py::class_<CpMasses>(m, "CpMasses")
        .def_readonly("n", &CpMasses::n)
        .def_readonly("n1", &CpMasses::n1)
        .def_readonly("n2", &CpMasses::n2)
        .def("__repr__", [](const CpMasses& c) {
            return "CpMasses(n=" + format_number(c.n) + ", n1=" + format_number(c.n1) +
                   ", n2=" + format_number(c.n2) + ")";
        });

    m.def("thresholds", [](const MarketParams& p, const CPProfile& cp, double d) {
        const auto th = thresholds(p, cp, d);
        return py::make_tuple(th.primary, th.secondary);
    }, py::arg("params"), py::arg("cp"), py::arg("d"));

    m.def("validate_assumptions", [](const MarketParams& p, const std::vector<CPProfile>& cps) {
        const auto r = validate_assumptions(p, cps);
        py::dict out;
        out["regime"] = to_string(r.regime);
        out["part1_ok"] = r.part1_ok;
        out["part2_lower_ok"] = r.part2_lower_ok;
        out["part2_upper_ok"] = r.part2_upper_ok;
        out["margins"] = r.margins;
        out["infinite_bounds"] = r.infinite_bounds;
        out["degenerate_bounds"] = r.degenerate_bounds;
        return out;
    }, py::arg("params"), py::arg("cps"));

    auto masses = [](auto fn) {
        return [fn](const MarketParams& p, const std::vector<CPProfile>& cps,
                    const std::optional<std::vector<double>>& d, bool allow_throttling) {
            return fn(p, cps, delays_or_default(p, d, allow_throttling)).cp;
        };
    };
    m.def("masses_multi", masses([](const auto& p, const auto& c, const auto& d) { return masses_multi(p, c, d); }),
          py::arg("params"), py::arg("cps"), py::arg("delays") = py::none(),
          py::arg("allow_throttling") = false);
    m.def("masses_single", masses([](const auto& p, const auto& c, const auto& d) { return masses_single(p, c, d); }),
          py::arg("params"), py::arg("cps"), py::arg("delays") = py::none(),
          py::arg("allow_throttling") = false);
    m.def("masses_all_dual",
          masses([](const auto& p, const auto& c, const auto& d) { return masses_all_dual(p, c, d); }),
          py::arg("params"), py::arg("cps"), py::arg("delays") = py::none(),
          py::arg("allow_throttling") = false);
    m.def("masses_nonuniform",
          [](const MarketParams& p, const std::vector<CPProfile>& cps,
             const std::vector<std::pair<double, double>>& knots,
             const std::optional<std::vector<double>>& d) {
              return masses_nonuniform(p, cps, delays_or_default(p, d, false), {knots}).cp;
          },
          py::arg("params"), py::arg("cps"), py::arg("knots"), py::arg("delays") = py::none());

    m.def("optimal_delay", &optimal_delay, py::arg("params"), py::arg("cp"), py::arg("cost"));
    m.def("analytic_optimal_delay", &analytic_optimal_delay, py::arg("params"), py::arg("cp"),
          py::arg("cost"));
    m.def("prioritization_price", &prioritization_price, py::arg("params"), py::arg("cp"),
          py::arg("d_star"));
    m.def("affordability_check", [](const MarketParams& p, const CPProfile& cp, const CostModel& c) {
        const auto a = affordability_check(p, cp, c);
        py::dict out;
        out["affordable"] = a.affordable;
        out["bound"] = a.bound;
        out["slope"] = a.slope;
        out["margin"] = a.margin;
        return out;
    }, py::arg("params"), py::arg("cp"), py::arg("cost"));

    auto offers_dict = [](const OfferSet& o) {
        py::dict out;
        py::list offers;
        for (const auto& x : o.offers) {
            py::dict d;
            d["cp"] = x.cp;
            d["d_star"] = x.d_star;
            d["p_star"] = x.p_star;
            d["accepted"] = x.accepted;
            d["isp_margin"] = x.isp_margin;
            offers.append(d);
        }
        out["offers"] = offers;
        out["delays"] = o.delays.d;
        out["prices"] = o.prices;
        out["isp_profit"] = o.isp_profit;
        return out;
    };
    m.def("offer_discriminatory",
          [offers_dict](const MarketParams& p, const std::vector<CPProfile>& cps,
                        const CostModel& c, bool exclusive) {
              return offers_dict(offer_discriminatory(p, cps, c, exclusive));
          },
          py::arg("params"), py::arg("cps"), py::arg("cost"), py::arg("exclusive") = false);
    m.def("optimize_single_purchase",
          [offers_dict](const MarketParams& p, const std::vector<CPProfile>& cps,
                        const CostModel& c, std::uint64_t seed) {
              JointOptions o;
              o.seed = seed;
              return offers_dict(optimize_single_purchase(p, cps, c, o).outcome);
          },
          py::arg("params"), py::arg("cps"), py::arg("cost"), py::arg("seed") = 1);

    m.def("uniform_menu_optimize", [](const MarketParams& p, const std::vector<CPProfile>& cps,
                                      const CostModel& c) {
        const auto r = uniform_menu_optimize(p, cps, c);
        py::dict out;
        out["d"] = r.d;
        out["p"] = r.p;
        out["accepted"] = r.accepted;
        out["profit"] = r.profit;
        return out;
    }, py::arg("params"), py::arg("cps"), py::arg("cost"));

    m.def("capacity_reallocation", [](const MarketParams& p, const std::vector<CPProfile>& cps,
                                      int target, double d_target) {
        const auto plan = capacity_reallocation(p, cps, target, d_target);
        py::dict out;
        out["total"] = plan.total;
        out["allocation"] = plan.allocation;
        out["delays"] = plan.delays.d;
        out["residuals"] = plan.residuals;
        return out;
    }, py::arg("params"), py::arg("cps"), py::arg("target"), py::arg("d_target"));

    m.def("welfare_closed",
          [](const MarketParams& p, const std::vector<CPProfile>& cps,
             const std::optional<std::vector<double>>& d, bool allow_throttling) {
              return total_welfare_closed(p, cps, delays_or_default(p, d, allow_throttling)).total;
          },
          py::arg("params"), py::arg("cps"), py::arg("delays") = py::none(),
          py::arg("allow_throttling") = false);
    m.def("welfare_numeric",
          [](const MarketParams& p, const std::vector<CPProfile>& cps,
             const std::optional<std::vector<double>>& d, int N, bool allow_throttling) {
              return total_welfare_numeric(p, cps, delays_or_default(p, d, allow_throttling), N).total;
          },
          py::arg("params"), py::arg("cps"), py::arg("delays") = py::none(),
          py::arg("N") = 100001, py::arg("allow_throttling") = false);

    m.def("run_oracle", [](const MarketParams& p, const std::vector<CPProfile>& cps,
                           const std::optional<std::vector<double>>& d, int N, double tol) {
        const auto r = run_oracle(p, cps, delays_or_default(p, d, false), N, tol);
        py::dict out;
        out["empirical"] = r.empirical.cp;
        out["max_error"] = r.max_error;
        out["tolerance"] = r.tolerance;
        out["pass"] = r.pass;
        out["adjacency_violations"] = r.adjacency_violations;
        return out;
    }, py::arg("params"), py::arg("cps"), py::arg("delays") = py::none(), py::arg("N") = 100001,
       py::arg("tol") = 0.0);

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("id", &Scenario::id)
        .def_readwrite("market", &Scenario::market)
        .def_readwrite("cps", &Scenario::cps)
        .def_readwrite("cost", &Scenario::cost)
        .def("to_json", [](const Scenario& s) { return to_json(s); })
        .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; });
    m.def("table2_scenario", &table2_scenario);
    m.def("load_scenario", &load_scenario, py::arg("path"), py::arg("allow_throttling") = false);
    m.def("parse_scenario", &parse_scenario, py::arg("text"), py::arg("allow_throttling") = false);

    m.def("run_sweep_csv", [](const Scenario& s, const std::string& recipe, std::uint64_t seed) {
        SweepOptions o;
        o.seed = seed;
        std::vector<ResultRow> rows;
        {
            py::gil_scoped_release release;
            rows = run_sweep(s, recipe, o);
        }
        return csv_text(rows);
    }, py::arg("scenario"), py::arg("recipe"), py::arg("seed") = 1);
    m.def("sweep_recipes", &sweep_recipes);
}
