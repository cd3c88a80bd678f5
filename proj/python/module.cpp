// Python bindings over the C entry points.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>

#include <string>
#include <vector>

#include "topo/c_api.h"

namespace py = pybind11;

namespace {

using Labels = py::array_t<std::uint8_t, py::array::c_style>;
using Likelihood = py::array_t<float, py::array::c_style>;

std::vector<std::size_t> dims_of(const py::array& a, py::ssize_t skip = 0) {
  std::vector<std::size_t> dims;
  for (py::ssize_t ax = skip; ax < a.ndim(); ++ax) dims.push_back(static_cast<std::size_t>(a.shape(ax)));
  return dims;
}

py::tuple detect(const Labels& labels, const std::string& constraints, const std::string& conn,
                 unsigned num_classes) {
  const auto dims = dims_of(labels);
  Labels mask(std::vector<py::ssize_t>(labels.shape(), labels.shape() + labels.ndim()));
  std::size_t violations = 0, foreground = 0;
  char err[512] = {};
  int rc;
  {
    py::gil_scoped_release release;
    rc = topo_detect_u8(labels.data(), dims.data(), dims.size(), num_classes, constraints.c_str(), conn.c_str(),
                        mask.mutable_data(), &violations, &foreground, err, sizeof err);
  }
  if (rc != 0) throw py::value_error(err);
  return py::make_tuple(mask, violations, foreground);
}

py::tuple loss_ti(const Likelihood& likelihood, const Labels& gt, const std::string& constraints,
                  const std::string& surrogate, const std::string& conn) {
  if (likelihood.ndim() != gt.ndim() + 1)
    throw py::value_error("likelihood must have shape (classes, *gt.shape)");
  const auto dims = dims_of(gt);
  if (dims_of(likelihood, 1) != dims) throw py::value_error("likelihood dims do not match gt dims");
  py::array_t<double> grad(std::vector<py::ssize_t>(likelihood.shape(), likelihood.shape() + likelihood.ndim()));
  double l_ti = 0.0;
  char err[512] = {};
  int rc;
  {
    py::gil_scoped_release release;
    rc = topo_loss_ti_f32(likelihood.data(), gt.data(), dims.data(), dims.size(),
                          static_cast<unsigned>(likelihood.shape(0)), constraints.c_str(), conn.c_str(),
                          surrogate.c_str(), &l_ti, grad.mutable_data(), err, sizeof err);
  }
  if (rc != 0) throw py::value_error(err);
  return py::make_tuple(l_ti, grad);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Critical-site detection and the masked interaction loss";
  m.attr("api_version") = topo_api_version();
  m.def("detect", &detect, py::arg("labels").noconvert(), py::arg("constraints"), py::arg("conn") = "",
        py::arg("num_classes") = 0u);
  m.def("loss_ti", &loss_ti, py::arg("likelihood").noconvert(), py::arg("gt").noconvert(), py::arg("constraints"),
        py::arg("surrogate") = "ce", py::arg("conn") = "");
}
