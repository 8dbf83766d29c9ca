#include "palletrack/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
namespace pt = palletrack;

namespace {

using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

pt::PointCloud to_cloud(const Eigen::Ref<const RowPoints>& pts, pt::Frame frame) {
    std::vector<pt::Vec3> v(static_cast<std::size_t>(pts.rows()));
    for (Eigen::Index i = 0; i < pts.rows(); ++i) v[static_cast<std::size_t>(i)] = pts.row(i).transpose();
    return pt::PointCloud(frame, std::move(v));
}

RowPoints to_array(const pt::PointCloud& c) {
    RowPoints out(static_cast<Eigen::Index>(c.size()), 3);
    for (std::size_t i = 0; i < c.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = c[i].transpose();
    return out;
}

py::dict report_dict(const pt::RunReport& r) {
    py::dict d;
    d["scenario"] = r.scenario;
    d["outcome"] = pt::to_string(r.outcome);
    d["final_fork_tilt"] = r.final_fork_tilt;
    d["final_surface_tilt"] = r.final_surface_tilt;
    d["max_drag"] = r.max_drag;
    d["cycles"] = r.cycles;
    d["converged_delta_tilt"] = r.converged_delta_tilt;
    d["withdraw_tracking_error"] = r.withdraw_tracking_error;
    d["switch_ever_off"] = r.switch_ever_off;
    d["sim_time"] = r.sim_time;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pallet tracking, fork control and unloading simulation";

    py::register_exception<pt::DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<pt::IcpError>(m, "IcpError", PyExc_RuntimeError);
    py::register_exception<pt::ScenarioParseError>(m, "ScenarioParseError", PyExc_ValueError);

    py::class_<pt::RigidTransform>(m, "RigidTransform")
        .def(py::init<>())
        .def(py::init<const pt::Mat3&, const pt::Vec3&>(), py::arg("rotation"), py::arg("translation"))
        .def_static("from_matrix", &pt::RigidTransform::from_matrix)
        .def_static("translation", py::overload_cast<double, double, double>(&pt::RigidTransform::translation))
        .def_static("rot_x", &pt::RigidTransform::rot_x)
        .def_static("rot_y", &pt::RigidTransform::rot_y)
        .def_static("rot_z", &pt::RigidTransform::rot_z)
        .def_property_readonly("rotation", &pt::RigidTransform::rotation)
        .def_property_readonly("t", &pt::RigidTransform::translation)
        .def("matrix", &pt::RigidTransform::matrix)
        .def("inverse", &pt::RigidTransform::inverse)
        .def("apply", &pt::RigidTransform::apply)
        .def("orthonormality_error", &pt::RigidTransform::orthonormality_error)
        .def("__matmul__", &pt::RigidTransform::operator*)
        .def("__repr__", [](const pt::RigidTransform& t) {
            std::ostringstream os;
            os << "RigidTransform(\n" << t.matrix() << ")";
            return os.str();
        });

    m.def("pitch_of", &pt::pitch_of);
    m.def("mast_from_height", [](double h) { return pt::mast_from_height(h, pt::MastPolyline()); },
          py::arg("fork_height"));

    m.def("extract_delta",
          [](const pt::RigidTransform& icp_t, const pt::RigidTransform& origin_from_camera) {
              const auto d = pt::extract_delta(icp_t, origin_from_camera);
              return py::make_tuple(d.tilt, d.height);
          },
          py::arg("icp_transform"), py::arg("origin_from_camera"),
          "(delta_tilt_rad, delta_height_m) of a camera-frame motion.");

    m.def("best_rigid_fit",
          [](const Eigen::Ref<const RowPoints>& src, const Eigen::Ref<const RowPoints>& dst) {
              const auto a = to_cloud(src, pt::Frame::Camera);
              const auto b = to_cloud(dst, pt::Frame::Camera);
              return pt::best_rigid_fit(a.points(), b.points());
          },
          py::arg("src"), py::arg("dst"));

    m.def("icp_register",
          [](const Eigen::Ref<const RowPoints>& src, const Eigen::Ref<const RowPoints>& dst,
             const pt::RigidTransform& init, int max_iterations, double eps, double max_dist) {
              pt::IcpParams p;
              p.max_iterations = max_iterations;
              p.convergence_eps = eps;
              p.max_correspondence_dist = max_dist;
              const auto r = pt::icp_register(to_cloud(src, pt::Frame::Camera),
                                              to_cloud(dst, pt::Frame::Camera), init, p);
              py::dict d;
              d["transform"] = r.transform;
              d["final_error"] = r.final_error;
              d["iterations"] = r.iterations;
              d["converged"] = r.converged;
              d["error_history"] = r.error_history;
              return d;
          },
          py::arg("src"), py::arg("dst"), py::arg("init") = pt::RigidTransform(),
          py::arg("max_iterations") = 30, py::arg("convergence_eps") = 1e-5,
          py::arg("max_correspondence_dist") = 0.15);

    m.def("random_downsample",
          [](const Eigen::Ref<const RowPoints>& pts, std::size_t n, std::uint64_t seed) {
              return to_array(pt::random_downsample(to_cloud(pts, pt::Frame::Camera), n, seed));
          },
          py::arg("points"), py::arg("target_n"), py::arg("seed"));

    m.def("update_surface_tilt",
          [](const std::vector<std::pair<double, double>>& map_deg, double load_kg) {
              pt::SurfaceModel s;
              for (auto [kg, deg] : map_deg) s.tilt_vs_load.emplace_back(kg, pt::deg2rad(deg));
              return pt::rad2deg(pt::update_surface_tilt(s, load_kg));
          },
          py::arg("tilt_vs_load_deg"), py::arg("load_kg"), "Incline magnitude in degrees.");

    m.def("withdraw_target_height",
          [](double start_height, double start_tilt, double s) {
              pt::ForkState f;
              f.height = start_height;
              f.tilt = start_tilt;
              return pt::plan_withdraw(f, pt::WithdrawGains{}).target_height(s);
          },
          py::arg("start_height"), py::arg("start_tilt"), py::arg("s"));

    m.def("run_scenario_text",
          [](const std::string& text, std::optional<std::uint64_t> seed) {
              pt::Scenario scn = pt::parse_scenario(text);
              if (seed) scn.seed = *seed;
              pt::RunResult res;
              {
                  py::gil_scoped_release release;
                  res = pt::run_scenario(scn);
              }
              py::dict d = report_dict(res.report);
              d["pass"] = pt::all_pass(pt::evaluate(scn, res.report));
              return py::make_tuple(d, res.csv);
          },
          py::arg("text"), py::arg("seed") = py::none(),
          "Run a scenario given as text. Returns (report, csv).");

    m.def("run_scenario_file",
          [](const std::string& path, std::optional<std::uint64_t> seed) {
              pt::Scenario scn = pt::load_scenario(path);
              if (seed) scn.seed = *seed;
              pt::RunResult res;
              {
                  py::gil_scoped_release release;
                  res = pt::run_scenario(scn);
              }
              py::dict d = report_dict(res.report);
              d["pass"] = pt::all_pass(pt::evaluate(scn, res.report));
              return py::make_tuple(d, res.csv);
          },
          py::arg("path"), py::arg("seed") = py::none());
}
