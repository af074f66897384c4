// Copyright 2026 The drmrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "drmrec/harness.hpp"

namespace py = pybind11;
using namespace drmrec;

namespace {

MetricWeight weight_of(const std::string& kind, std::size_t cutoff) { return {parse_weight_kind(kind), cutoff}; }

ExperimentConfig config_from(const py::dict& settings) {
  ExperimentConfig config;
  for (const auto& [key, value] : settings) {
    const auto text = py::isinstance<py::bool_>(value) ? std::string(value.cast<bool>() ? "true" : "false")
                                                       : py::str(value).cast<std::string>();
    config.set(py::str(key).cast<std::string>(), text);
  }
  return config;
}

py::dict report_dict(const RunReport& report) {
  py::dict out;
  out["fingerprint"] = report.fingerprint;
  py::dict mean, stddev;
  for (std::size_t m = 0; m < report.metrics.size(); ++m) {
    const auto label = metric_label(report.metrics[m].kind, report.metrics[m].cutoff);
    mean[py::str(label)] = report.mean[m];
    stddev[py::str(label)] = report.stddev[m];
  }
  out["mean"] = mean;
  out["std"] = stddev;
  out["runs_ok"] = report.successful();
  out["table"] = report.to_table();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differentiable ranking metric training for implicit-feedback factor models.";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_ValueError);
  py::register_exception<EmptyDatasetError>(m, "EmptyDatasetError", PyExc_ValueError);
  py::register_exception<NonFiniteGradientError>(m, "NonFiniteGradientError", PyExc_ArithmeticError);

  // relaxed sorting
  m.def("softmax", [](const std::vector<double>& z) { return softmax(z); });
  m.def("relaxed_perm_row", [](const std::vector<double>& s, std::size_t k, double tau) {
    return relaxed_perm_row(s, k, tau);
  }, py::arg("scores"), py::arg("k"), py::arg("tau"));
  m.def("relaxed_perm_matrix", [](const std::vector<double>& s, double tau) {
    const RelaxedSort sort(s, tau);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 1; k <= s.size(); ++k) rows.push_back(sort.row(k));
    return rows;
  }, py::arg("scores"), py::arg("tau"));
  m.def("hard_perm", [](const std::vector<double>& s) { return hard_perm(s).columns(); },
        "Column of the 1 in each row of the sorting permutation.");
  m.def("weighted_truncated_sum", [](const std::vector<double>& s, const std::vector<double>& w, double tau) {
    return weighted_truncated_sum(s, w, tau);
  }, py::arg("scores"), py::arg("weights"), py::arg("tau"));

  // metrics
  m.def("precision_at", [](std::size_t k, const std::vector<ItemId>& r, const std::vector<ItemId>& h) {
    return precision_at(k, r, h);
  });
  m.def("recall_at", [](std::size_t k, const std::vector<ItemId>& r, const std::vector<ItemId>& h) {
    return recall_at(k, r, h);
  });
  m.def("ndcg_at", [](std::size_t k, const std::vector<ItemId>& r, const std::vector<ItemId>& h) {
    return ndcg_at(k, r, h);
  });
  m.def("ap_at", [](std::size_t k, const std::vector<ItemId>& r, const std::vector<ItemId>& h) {
    return ap_at(k, r, h);
  });
  m.def("unified_metric", [](const std::string& kind, std::size_t cutoff, const std::vector<ItemId>& r,
                             const std::vector<ItemId>& h) { return unified_metric(weight_of(kind, cutoff), r, h); },
        py::arg("weight"), py::arg("cutoff"), py::arg("ranking"), py::arg("holdout"));
  m.def("rank_weights", [](const std::string& kind, std::size_t cutoff, std::size_t num_relevant) {
    return rank_weights(weight_of(kind, cutoff), num_relevant);
  });

  // objectives
  m.def("drm_loss", [](const std::vector<double>& y, const std::vector<double>& s, const std::vector<double>& w,
                       double tau) { return drm_loss(y, s, w, tau); },
        py::arg("labels"), py::arg("scores"), py::arg("weights"), py::arg("tau"));
  m.def("drm_grad_scores", [](const std::vector<double>& y, const std::vector<double>& s,
                              const std::vector<double>& w, double tau) { return drm_grad_scores(y, s, w, tau); },
        py::arg("labels"), py::arg("scores"), py::arg("weights"), py::arg("tau"));
  m.def("phi_weight", [](double positive, const std::vector<double>& negatives, std::size_t num_items) {
    return phi_weight(positive, negatives, num_items);
  });
  m.def("hinge_loss", [](const std::vector<double>& s, std::size_t i, std::size_t j, double margin, double phi) {
    return hinge_loss(s, i, j, margin, phi);
  });
  m.def("mse_loss", [](const std::vector<double>& y, const std::vector<double>& s) {
    const auto r = mse_loss(y, s);
    return py::make_tuple(r.value, r.gradient);
  });

  // data
  py::class_<InteractionMatrix>(m, "InteractionMatrix")
      .def(py::init([](std::size_t num_items, std::vector<std::vector<ItemId>> lists) {
        return InteractionMatrix(num_items, std::move(lists));
      }), py::arg("num_items"), py::arg("lists"))
      .def_property_readonly("num_users", &InteractionMatrix::num_users)
      .def_property_readonly("num_items", &InteractionMatrix::num_items)
      .def_property_readonly("num_interactions", &InteractionMatrix::num_interactions)
      .def("items", [](const InteractionMatrix& x, UserId u) {
        const auto s = x.items(u);
        return std::vector<ItemId>(s.begin(), s.end());
      })
      .def("to_pair_list", [](const InteractionMatrix& x) {
        std::ostringstream out;
        write_pair_list(out, x);
        return out.str();
      });
  m.def("load_interactions", [](const std::filesystem::path& p, const std::string& format) {
    return load_interactions(p, parse_input_format(format));
  }, py::arg("path"), py::arg("format") = "pair-list");
  m.def("make_synthetic", [](std::size_t users, std::size_t items, std::size_t rank, std::size_t positives,
                             std::uint64_t seed) { return make_synthetic({users, items, rank, positives, seed}); },
        py::arg("num_users") = 200, py::arg("num_items") = 300, py::arg("rank") = 8,
        py::arg("positives_per_user") = 20, py::arg("seed") = 0);
  m.def("split", [](const InteractionMatrix& x, double train, double validation, double test, std::uint64_t seed) {
    const auto s = split(x, {train, validation, test, seed});
    return py::make_tuple(s.train, s.validation, s.test);
  }, py::arg("matrix"), py::arg("train") = 0.7, py::arg("validation") = 0.1, py::arg("test") = 0.2,
        py::arg("seed") = 0);

  // model
  py::class_<FactorModel>(m, "FactorModel")
      .def_property_readonly("num_users", &FactorModel::num_users)
      .def_property_readonly("num_items", &FactorModel::num_items)
      .def_property_readonly("dim", &FactorModel::dim)
      .def_property_readonly("kind", [](const FactorModel& x) { return std::string(to_string(x.kind())); })
      .def("score", &FactorModel::score)
      .def("score_list", [](const FactorModel& x, UserId u, const std::vector<ItemId>& items) {
        return x.score_list(u, items);
      })
      .def("user", [](const FactorModel& x, UserId u) {
        const auto s = x.user(u);
        return std::vector<double>(s.begin(), s.end());
      })
      .def("item", [](const FactorModel& x, ItemId i) {
        const auto s = x.item(i);
        return std::vector<double>(s.begin(), s.end());
      })
      .def("save", [](const FactorModel& x, const std::filesystem::path& p) { save_model(p, x); })
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); })
      .def(py::self == py::self);
  m.def("init_model", [](std::size_t users, std::size_t items, std::size_t dim, const std::string& kind,
                         std::uint64_t seed) { return init_model(users, items, dim, parse_score_kind(kind), seed); },
        py::arg("num_users"), py::arg("num_items"), py::arg("dim"), py::arg("kind") = "dot", py::arg("seed") = 0);

  // training and evaluation
  m.def("fit", [](const InteractionMatrix& train, const InteractionMatrix& validation, const py::dict& settings) {
    const auto hp = config_from(settings).hyper_params();
    FitResult r;
    {
      py::gil_scoped_release release;
      r = fit(train, validation, hp);
    }
    return py::make_tuple(r.model, format_trace(r.trace, hp), r.best_epoch);
  }, py::arg("train"), py::arg("validation"), py::arg("settings") = py::dict(),
        "Trains one model. `settings` takes the same keys as a config file.");
  m.def("evaluate", [](const FactorModel& model, const InteractionMatrix& known, const InteractionMatrix& holdout,
                       const std::vector<std::size_t>& extra_cutoffs, std::size_t min_train) {
    const auto metrics = report_metrics(extra_cutoffs);
    const auto report = evaluate_model(model, known, holdout, metrics, min_train);
    py::dict out;
    for (const auto& row : report.rows) out[py::str(metric_label(row.metric.kind, row.metric.cutoff))] = row.mean;
    return out;
  }, py::arg("model"), py::arg("known"), py::arg("holdout"), py::arg("extra_cutoffs") = std::vector<std::size_t>{},
        py::arg("min_train") = 5);
  m.def("run_experiment", [](const py::dict& settings, const std::filesystem::path& out) {
    const auto config = config_from(settings);
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = run_experiment(config, out);
    }
    return report_dict(r.report);
  }, py::arg("settings"), py::arg("out") = std::filesystem::path());
  m.def("config_fingerprint", [](const py::dict& settings) { return config_from(settings).fingerprint(); });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); });
}
