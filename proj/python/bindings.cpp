// Python bindings over numpy arrays (float64 images, uint8 masks).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "urveda/edge.h"
#include "urveda/json_io.h"
#include "urveda/nifti.h"
#include "urveda/phantom.h"
#include "urveda/trainer.h"

namespace py = pybind11;
using namespace urveda;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const F64Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

F64Array array_from(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  F64Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

// 2D image → 1×H×W tensor.
Tensor image_from(const F64Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2D image array");
  return Tensor({1, static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))},
                std::vector<double>(a.data(), a.data() + a.size()));
}

SegmentationMask mask_from(const U8Array& a, std::size_t classes) {
  if (a.ndim() != 2) throw ShapeError("expected a 2D mask array");
  SegmentationMask m = SegmentationMask::zeros(a.shape(0), a.shape(1), classes);
  std::copy(a.data(), a.data() + a.size(), m.labels.begin());
  m.validate();
  return m;
}

U8Array array_from(const SegmentationMask& m) {
  U8Array out({static_cast<py::ssize_t>(m.height), static_cast<py::ssize_t>(m.width)});
  std::copy(m.labels.begin(), m.labels.end(), out.mutable_data());
  return out;
}

BinaryMask binary_from(const U8Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2D binary mask");
  BinaryMask b = BinaryMask::zeros(a.shape(0), a.shape(1));
  for (py::ssize_t i = 0; i < a.size(); ++i) b.bits[i] = a.data()[i] != 0;
  return b;
}

NetworkConfig config_from(const py::dict& d) {
  const auto json_mod = py::module_::import("json");
  const std::string text = py::str(json_mod.attr("dumps")(d));
  return network_config_from_json(nlohmann::json::parse(text));
}

py::dict config_to_dict(const NetworkConfig& c) {
  return py::module_::import("json").attr("loads")(to_json(c).dump());
}

}  // namespace

PYBIND11_MODULE(_urveda, m) {
  m.doc() = "Residual UNet with dual attention, a transformer bottleneck and edge-aware skips";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  m.def("softmax", [](const F64Array& x, std::size_t axis) { return array_from(softmax(tensor_from(x), axis)); },
        py::arg("x"), py::arg("axis"));
  m.def("sobel_magnitude", [](const F64Array& image) { return array_from(sobel_magnitude(image_from(image)).values); },
        py::arg("image"), "Normalized Sobel gradient magnitude of a 2D image (H×W → 1×H×W).");

  m.def("dsc", [](const U8Array& x, const U8Array& y) { return dsc(binary_from(x), binary_from(y)); },
        py::arg("x"), py::arg("y"));
  m.def(
      "hausdorff",
      [](const U8Array& x, const U8Array& y, std::optional<std::pair<double, double>> spacing) {
        std::optional<PixelSpacing> s;
        if (spacing) s = PixelSpacing{spacing->first, spacing->second};
        return hausdorff(boundary_points(binary_from(x)), boundary_points(binary_from(y)), HausdorffMode::kSymmetric, s);
      },
      py::arg("x"), py::arg("y"), py::arg("spacing") = py::none(),
      "Symmetric Hausdorff distance between mask boundaries; None if either is empty.");

  m.def(
      "read_nifti1",
      [](const py::bytes& data) {
        const std::string s = data;
        const Volume v = read_nifti1(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        std::vector<py::ssize_t> shape(v.dims.rbegin(), v.dims.rend());
        F64Array values(shape);
        std::copy(v.data.begin(), v.data.end(), values.mutable_data());
        py::dict out;
        out["dims"] = v.dims;
        out["spacing"] = v.spacing;
        out["data"] = values;
        out["datatype"] = static_cast<int>(v.datatype);
        return out;
      },
      py::arg("data"), "Decode an uncompressed NIfTI-1 file; data is indexed [..., y, x].");

  m.def(
      "generate_phantom",
      [](std::uint64_t seed, std::size_t height, std::size_t width) {
        const SliceSample s = generate_phantom(seed, height, width);
        py::dict out;
        out["id"] = s.id;
        out["image"] = array_from(reshape(s.image, {height, width}));
        out["mask"] = array_from(s.mask);
        out["phase"] = s.provenance.phase;
        return out;
      },
      py::arg("seed"), py::arg("height") = 64, py::arg("width") = 64);

  m.def("kfold_split",
        [](std::size_t count, std::size_t k, std::uint64_t seed) {
          std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
          for (const Fold& f : kfold_split(count, k, seed)) out.emplace_back(f.train, f.validation);
          return out;
        },
        py::arg("count"), py::arg("k"), py::arg("seed"), "List of (train indices, validation indices).");

  m.def(
      "ce_loss",
      [](const F64Array& logits, const U8Array& truth) {
        const Tensor t = tensor_from(logits);
        if (t.rank() != 3) throw ShapeError("logits must be classes×H×W");
        return ce_loss(t, mask_from(truth, t.dim(0))).item();
      },
      py::arg("logits"), py::arg("truth"));

  py::class_<URVedaModel>(m, "Model")
      .def(py::init([](const py::dict& config, std::uint64_t seed) {
             return URVedaModel::create(config_from(config), seed);
           }),
           py::arg("config") = py::dict(), py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) { return load_checkpoint(p); }, py::arg("path"))
      .def("save", [](const URVedaModel& model, const std::filesystem::path& p) { save_checkpoint(model, p); },
           py::arg("path"))
      .def_property_readonly("config", [](const URVedaModel& model) { return config_to_dict(model.config()); })
      .def_property_readonly("parameter_count", [](const URVedaModel& model) { return count_parameters(model); })
      .def("forward", [](const URVedaModel& model, const F64Array& image) {
             return array_from(model.forward(image_from(image)));
           },
           py::arg("image"), "H×W image in [0,1] → classes×H×W logits.")
      .def("predict", [](const URVedaModel& model, const F64Array& image) {
             return array_from(predict_mask(model.forward(image_from(image))));
           },
           py::arg("image"));
}
