#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "sparsekit/checkpoint.hpp"
#include "sparsekit/engine.hpp"
#include "sparsekit/experiment.hpp"

namespace py = pybind11;
namespace sk = sparsekit;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

sk::Tensor to_tensor(const DoubleArray& a) {
  sk::Shape shape(a.shape(), a.shape() + a.ndim());
  if (shape.empty()) shape = {1};
  return sk::Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_array(const sk::Tensor& t) {
  py::array_t<double> out(t.shape());
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

sk::ParamTree to_tree(const std::map<std::string, DoubleArray>& params) {
  sk::ParamTree tree;
  for (const auto& [path, a] : params) tree.set(path, to_tensor(a));
  return tree;
}

py::dict to_dict(const sk::ParamTree& tree) {
  py::dict out;
  for (const auto& [path, t] : tree) out[py::str(path)] = to_array(t);
  return out;
}

py::dict masks_to_dict(const sk::MaskTree& masks) {
  py::dict out;
  for (const auto& [path, m] : masks) {
    py::array_t<std::uint8_t> a(m.shape());
    const auto bytes = m.to_bytes();
    std::copy(bytes.begin(), bytes.end(), a.mutable_data());
    out[py::str(path)] = a;
  }
  return out;
}

sk::UpdaterConfig one_shot_config(const std::string& algorithm, double sparsity, const std::string& structure,
                                  const std::string& distribution, std::uint64_t seed) {
  sk::UpdaterConfig cfg;
  cfg.algorithm = sk::parse_algorithm(algorithm);
  cfg.structure = sk::parse_structure(structure);
  if (cfg.structure.fixes_sparsity()) sparsity = cfg.structure.implied_sparsity();
  cfg.distribution.kind = sk::parse_distribution_kind(distribution);
  cfg.distribution.target_sparsity = sparsity;
  cfg.schedule.final_sparsity = sparsity;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse training and pruning primitives";

  auto base = py::register_exception<sk::Error>(m, "SparsekitError");
  py::register_exception<sk::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<sk::StructureError>(m, "StructureError", base.ptr());
  py::register_exception<sk::ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<sk::UnsupportedError>(m, "UnsupportedError", base.ptr());
  py::register_exception<sk::CheckpointError>(m, "CheckpointError", base.ptr());
  py::register_exception<sk::DataError>(m, "DataError", base.ptr());

  m.def(
      "topk_indices",
      [](const DoubleArray& scores, std::size_t k) {
        return sk::topk_indices(std::span<const double>(scores.data(), scores.size()), k);
      },
      py::arg("scores"), py::arg("k"), "Indices of the k largest scores (ties to the lower index), ascending.");
  m.def("zero_count", &sk::zero_count, py::arg("sparsity"), py::arg("n"));

  py::class_<sk::ScheduleConfig>(m, "Schedule")
      .def(py::init([](const std::string& kind, std::int64_t begin_step, std::int64_t end_step,
                       std::int64_t frequency, double initial_sparsity, double final_sparsity, double power) {
             sk::ScheduleConfig cfg;
             cfg.kind = sk::parse_schedule_kind(kind);
             cfg.begin_step = begin_step;
             cfg.end_step = end_step;
             cfg.frequency = frequency;
             cfg.initial_sparsity = initial_sparsity;
             cfg.final_sparsity = final_sparsity;
             cfg.power = power;
             cfg.validate();
             return cfg;
           }),
           py::arg("kind") = "polynomial", py::arg("begin_step") = 0, py::arg("end_step") = 0,
           py::arg("frequency") = 1, py::arg("initial_sparsity") = 0.0, py::arg("final_sparsity") = 0.0,
           py::arg("power") = 3.0)
      .def("should_update", [](const sk::ScheduleConfig& c, std::int64_t step) { return sk::should_update(c, step); })
      .def("sparsity", [](const sk::ScheduleConfig& c, std::int64_t step) { return sk::current_sparsity(c, step); })
      .def_property_readonly("kind", [](const sk::ScheduleConfig& c) { return sk::to_string(c.kind); });

  m.def(
      "drop_fraction",
      [](double initial, std::int64_t step, std::int64_t end_step) {
        return sk::drop_fraction(sk::DropGrowConfig{initial}, step, end_step);
      },
      py::arg("initial"), py::arg("step"), py::arg("end_step"));

  m.def(
      "compute_distribution",
      [](const std::map<std::string, DoubleArray>& params, const std::string& kind, double sparsity,
         std::vector<std::string> exclude) {
        sk::DistributionSpec spec;
        spec.kind = sk::parse_distribution_kind(kind);
        spec.target_sparsity = sparsity;
        spec.exclude = std::move(exclude);
        return sk::compute_distribution(spec, to_tree(params));
      },
      py::arg("params"), py::arg("kind"), py::arg("sparsity"), py::arg("exclude") = std::vector<std::string>{});

  m.def(
      "structured_mask",
      [](const DoubleArray& scores, double sparsity, const std::string& structure) {
        return to_array(sk::structured_mask(to_tensor(scores), sparsity, sk::parse_structure(structure)));
      },
      py::arg("scores"), py::arg("sparsity"), py::arg("structure") = "unstructured");

  m.def(
      "pack_mask",
      [](const ByteArray& mask) {
        const sk::PackedBits p = sk::pack_mask(std::span<const std::uint8_t>(mask.data(), mask.size()));
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(p.bytes.data()), p.bytes.size()), p.count);
      },
      py::arg("mask"), "LSB-first bit packing; returns (bytes, count).");
  m.def(
      "unpack_mask",
      [](const py::bytes& data, std::size_t count) {
        const std::string s = data;
        sk::PackedBits p{std::vector<std::uint8_t>(s.begin(), s.end()), count};
        const auto bytes = sk::unpack_mask(p);
        py::array_t<std::uint8_t> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(bytes.size())});
        auto view = out.mutable_unchecked<1>();
        for (std::size_t i = 0; i < bytes.size(); ++i) view(static_cast<py::ssize_t>(i)) = bytes[i];
        return out;
      },
      py::arg("data"), py::arg("count"));

  m.def(
      "instant_sparsify",
      [](const std::map<std::string, DoubleArray>& params, const std::string& algorithm, double sparsity,
         const std::string& structure, const std::string& distribution, std::uint64_t seed) {
        const sk::Updater updater(one_shot_config(algorithm, sparsity, structure, distribution, seed));
        const sk::ParamTree tree = to_tree(params);
        const sk::MaskTree masks = updater.instant_masks(tree);
        return py::make_tuple(to_dict(sk::apply_masks(tree, masks)), masks_to_dict(masks));
      },
      py::arg("params"), py::arg("algorithm") = "mag", py::arg("sparsity") = 0.5,
      py::arg("structure") = "unstructured", py::arg("distribution") = "uniform", py::arg("seed") = 0,
      "One-shot prune; returns (pruned params, keep masks).");

  m.def(
      "train",
      [](const std::string& config_json) {
        sk::ExperimentConfig cfg = sk::parse_experiment(nlohmann::json::parse(config_json));
        sk::TrainOptions options;
        options.write_files = false;
        sk::TrainResult r;
        {
          py::gil_scoped_release release;
          r = sk::train(cfg, options);
        }
        std::vector<std::string> lines;
        for (const auto& rec : r.metrics) lines.push_back(rec.dump());
        py::dict out;
        out["step"] = r.step;
        out["eval_accuracy"] = r.final_eval_accuracy;
        out["total_sparsity"] = r.summary.total.sparsity();
        out["masked_sparsity"] = r.summary.masked.sparsity();
        out["metrics"] = lines;
        out["params"] = to_dict(r.params);
        return out;
      },
      py::arg("config_json"), "Runs one experiment from a JSON config string; nothing is written to disk.");

  m.def(
      "load_checkpoint",
      [](const std::string& dir) {
        const sk::Checkpoint c = sk::load_checkpoint(dir);
        py::dict out;
        out["step"] = c.step;
        out["params"] = to_dict(c.params);
        out["masks"] = c.state.extension ? masks_to_dict(sk::sparsity_state(c.state).masks) : py::dict();
        return out;
      },
      py::arg("dir"));
}
