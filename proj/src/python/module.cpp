#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arax/backends/kernel.hpp"
#include "arax/bench/driver.hpp"
#include "arax/client/api.hpp"
#include "arax/server/runtime.hpp"
#include "arax/stubgen/annotations.hpp"
#include "arax/stubgen/parser.hpp"

namespace py = pybind11;
using namespace arax;

namespace {

// Each wrapper holds a strong reference to its parent so Python's collector
// can never tear down a runtime under a live session or queue.
struct PyRuntime {
  std::unique_ptr<server::Runtime> rt;
};

struct PySession {
  std::shared_ptr<PyRuntime> owner;
  std::unique_ptr<client::Session> s;
};

struct PyQueue {
  std::shared_ptr<PySession> session;
  client::TaskQueue q;
  bool released = false;
};

struct PyBuffer {
  std::shared_ptr<PySession> session;
  client::TaskBuffer b;
  bool freed = false;
};

struct PyHandle {
  std::shared_ptr<PySession> session;
  client::TaskHandle h;
  std::shared_ptr<std::vector<std::byte>> out;  // sync_from destination
  bool waited = false;
  std::string status;
  client::TaskTiming timing;
};

client::ArgDirection direction(const std::string& s) {
  if (s == "in") return client::ArgDirection::kIn;
  if (s == "out") return client::ArgDirection::kOut;
  if (s == "inout") return client::ArgDirection::kInOut;
  throw py::value_error("direction must be 'in', 'out' or 'inout'");
}

std::span<const std::byte> view(const py::bytes& b) {
  char* p = nullptr;
  py::ssize_t n = 0;
  PYBIND11_BYTES_AS_STRING_AND_SIZE(b.ptr(), &p, &n);
  return {reinterpret_cast<const std::byte*>(p), static_cast<std::size_t>(n)};
}

server::ServerConfig make_config(const std::optional<std::string>& json, std::size_t devices) {
  if (json) return server::parse_server_config(*json);
  server::ServerConfig cfg;
  for (std::size_t i = 0; i < devices; ++i) {
    backends::DeviceDescriptor d;
    d.name = "cpu" + std::to_string(i);
    d.id = static_cast<backends::DeviceId>(i);
    d.mem_capacity = 256ull << 20;
    d.streams = 4;
    cfg.devices.push_back(d);
  }
  return cfg;
}

std::string wait_handle(PyHandle& h) {
  if (h.waited) return h.status;
  client::TaskStatus st;
  {
    py::gil_scoped_release nogil;
    st = client::a_wait(h.h, &h.timing);
  }
  h.waited = true;
  h.status = std::string(client::to_string(st));
  return h.status;
}

}  // namespace

PYBIND11_MODULE(_arax, m) {
  m.doc() = "Accelerator runtime: same-process server, client API, bench driver and stub parser.";

  static py::exception<Error> arax_error(m, "AraxError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object code = py::str(std::string(errc_name(e.code())));
      PyErr_SetObject(arax_error.ptr(), py::make_tuple(code, py::str(e.what())).ptr());
    }
  });

  py::class_<PyHandle, std::shared_ptr<PyHandle>>(m, "Handle")
      .def("wait", &wait_handle, "Block until the task finished; returns its status name.")
      .def("poll",
           [](PyHandle& h) {
             if (h.waited) return h.status;
             return std::string(client::to_string(h.session->s->poll(h.h)));
           })
      .def_property_readonly("data",
                             [](PyHandle& h) -> py::object {
                               if (!h.out) return py::none();
                               if (!h.waited) wait_handle(h);
                               return py::bytes(reinterpret_cast<const char*>(h.out->data()), h.out->size());
                             })
      .def_property_readonly("start_ns", [](const PyHandle& h) { return h.timing.start_ns; })
      .def_property_readonly("end_ns", [](const PyHandle& h) { return h.timing.end_ns; });

  py::class_<PyBuffer, std::shared_ptr<PyBuffer>>(m, "Buffer")
      .def_property_readonly("size", [](const PyBuffer& b) { return b.b.size; })
      .def_property_readonly("id", [](const PyBuffer& b) { return b.b.id; })
      .def("free", [](PyBuffer& b) {
        if (b.freed) throw py::value_error("buffer already freed");
        client::a_free(b.b);
        b.freed = true;
      });

  py::class_<PyQueue, std::shared_ptr<PyQueue>>(m, "Queue")
      .def("sync_to",
           [](PyQueue& q, const PyBuffer& b, const py::bytes& data) {
             auto h = std::make_shared<PyHandle>();
             h->session = q.session;
             h->h = client::a_sync_to(q.q, b.b, view(data));
             return h;
           })
      .def(
          "sync_from",
          [](PyQueue& q, const PyBuffer& b, std::optional<std::uint64_t> size) {
            auto h = std::make_shared<PyHandle>();
            h->session = q.session;
            h->out = std::make_shared<std::vector<std::byte>>(size.value_or(b.b.size));
            h->h = client::a_sync_from(q.q, b.b, *h->out);
            return h;
          },
          py::arg("buffer"), py::arg("size") = py::none())
      .def(
          "issue",
          [](PyQueue& q, const std::string& kernel, const std::vector<std::pair<std::shared_ptr<PyBuffer>, std::string>>& args,
             const py::bytes& scalars) {
            std::vector<client::TaskArgRef> refs;
            for (const auto& [b, d] : args) refs.push_back({b->b, direction(d)});
            auto h = std::make_shared<PyHandle>();
            h->session = q.session;
            h->h = client::a_issue(q.q, {kernel, refs, view(scalars)});
            return h;
          },
          py::arg("kernel"), py::arg("args") = std::vector<std::pair<std::shared_ptr<PyBuffer>, std::string>>{},
          py::arg("scalars") = py::bytes())
      .def("release", [](PyQueue& q) {
        if (q.released) throw py::value_error("queue already released");
        client::a_release(q.q);
        q.released = true;
      });

  py::class_<PySession, std::shared_ptr<PySession>>(m, "Session")
      .def("acquire",
           [](std::shared_ptr<PySession> s) {
             auto q = std::make_shared<PyQueue>();
             q->session = s;
             q->q = client::a_acquire(*s->s);
             return q;
           })
      .def("allocate",
           [](std::shared_ptr<PySession> s, std::uint64_t size) {
             auto b = std::make_shared<PyBuffer>();
             b->session = s;
             b->b = client::a_allocate(*s->s, size);
             return b;
           })
      .def_property_readonly("priority",
                             [](const PySession& s) { return s.s->priority() == shm::Priority::kHigh ? "high" : "low"; })
      .def("close", [](PySession& s) { s.s->close(); });

  py::class_<PyRuntime, std::shared_ptr<PyRuntime>>(m, "Runtime")
      .def(py::init([](std::optional<std::string> config_json, std::size_t devices, bool virtual_clock) {
             auto r = std::make_shared<PyRuntime>();
             server::RuntimeOptions opts;
             opts.virtual_clock = virtual_clock;
             r->rt = std::make_unique<server::Runtime>(make_config(config_json, devices), opts);
             return r;
           }),
           py::arg("config_json") = py::none(), py::arg("devices") = 1, py::arg("virtual_clock") = true)
      .def(
          "session",
          [](std::shared_ptr<PyRuntime> r, std::optional<std::string> priority) {
            std::optional<shm::Priority> p;
            if (priority) {
              if (*priority == "high") {
                p = shm::Priority::kHigh;
              } else if (*priority == "low") {
                p = shm::Priority::kLow;
              } else {
                throw py::value_error("priority must be 'high' or 'low'");
              }
            }
            auto s = std::make_shared<PySession>();
            s->owner = r;
            s->s = r->rt->open_session(p);
            return s;
          },
          py::arg("priority") = py::none())
      .def("drain", [](PyRuntime& r) { r.rt->drain(); })
      .def_property_readonly("device_count", [](const PyRuntime& r) { return r.rt->server().device_count(); })
      .def("device_used_bytes", [](PyRuntime& r, std::uint32_t d) { return r.rt->server().device_used_bytes(d); })
      .def("stats", [](PyRuntime& r) {
        const auto s = r.rt->server().stats();
        py::dict d;
        d["tasks_completed"] = s.tasks_completed;
        d["tasks_failed"] = s.tasks_failed;
        d["migrations"] = s.migrations;
        d["rollbacks"] = s.rollbacks;
        d["bytes_moved"] = s.bytes_moved;
        return d;
      });

  m.def("pack_i64", [](const std::vector<std::int64_t>& v) {
    const auto blob = backends::pack_i64(v);
    return py::bytes(reinterpret_cast<const char*>(blob.data()), blob.size());
  });

  m.def("scenario_names", [] { return bench::scenario_names(); });
  m.def("scenario", [](const std::string& name) { return bench::workload_to_json(bench::scenario(name)); },
        "Workload JSON of a built-in scenario.");
  m.def(
      "run_workload",
      [](const std::string& workload, std::optional<std::string> config_json, std::optional<std::string> mode,
         bool virtual_clock) {
        const bool builtin = workload.find('{') == std::string::npos;
        const auto spec = builtin ? bench::scenario(workload) : bench::parse_workload(workload);
        const auto cfg = config_json ? server::parse_server_config(*config_json)
                                     : bench::scenario_config(builtin ? workload : spec.name);
        bench::RunOptions opts;
        opts.virtual_clock = virtual_clock;
        if (mode) opts.mode = server::parse_sharing_mode(*mode);
        bench::Metrics metrics;
        {
          py::gil_scoped_release nogil;
          metrics = bench::run_workload(spec, cfg, opts);
        }
        return bench::to_csv(metrics);
      },
      py::arg("workload"), py::arg("config_json") = py::none(), py::arg("mode") = py::none(),
      py::arg("virtual_clock") = true, "Runs a scenario name or workload JSON; returns the metrics CSV.");

  m.def(
      "parse_api",
      [](const std::string& header, std::optional<std::string> annotations) {
        auto r = stubgen::parse_api(header);
        auto spec = annotations ? stubgen::merge_annotations(r.spec, stubgen::parse_annotations(*annotations),
                                                             stubgen::MergeMode::kAllowPartial)
                                : r.spec;
        return std::make_tuple(stubgen::to_json(spec), spec.complete_count(), spec.functions.size());
      },
      py::arg("header"), py::arg("annotations") = py::none(),
      "Parses a C header; returns (spec JSON, complete functions, total functions).");
}
