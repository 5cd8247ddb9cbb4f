// Copyright 2026 The qgl Authors
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

// Runs the qgl binary end to end and inspects exit codes and output files.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>

#include "qgl/fixtures.hpp"
#include "qgl/io.hpp"

using namespace qgl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qgl_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(QGL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) { return json::parse(read_text_file(p.string())); }

}  // namespace

TEST(Cli, EquatorBerryPhase) {
  const fs::path d = scratch("equator");
  ASSERT_EQ(run("holonomy --model spin_half --loop equator --out " + d.string(), d / "log"), 0);
  const json h = read_json(d / "holonomy.json");
  EXPECT_NEAR(h["phase"].get<double>(), pi, 1e-6);
  EXPECT_NEAR(h["theta"].get<double>(), pi, 1e-6);
  EXPECT_TRUE(fs::exists(d / "run.json"));
  EXPECT_TRUE(fs::exists(d / "run.toml"));
  EXPECT_EQ(read_json(d / "run.json")["command"], "holonomy");
}

TEST(Cli, TargetFidelityAndRefinement) {
  const fs::path d = scratch("refine");
  ASSERT_EQ(run("holonomy --model tripod --loop tripod_fixture --segments 64 --refine-tol 1e-8 --target identity --out " +
                    d.string(),
                d / "log"),
            0);
  const std::string table = read_text_file((d / "refinement.csv").string());
  EXPECT_EQ(table.substr(0, table.find('\n')), "segments,difference");
  const json h = read_json(d / "holonomy.json");
  EXPECT_TRUE(h["refinement"]["converged"].get<bool>());
  EXPECT_GT(h["fidelity"].get<double>(), 0.0);
  EXPECT_LE(h["fidelity"].get<double>(), 1.0 + 1e-12);
}

TEST(Cli, ContourFileInput) {
  const fs::path d = scratch("contour");
  write_text_file((d / "loop.csv").string(), contour_to_csv(latitude_loop(2, 1.0).sample(400)));
  ASSERT_EQ(run("holonomy --model spin_half --contour " + (d / "loop.csv").string() + " --closed --refine-tol 1e-10 --out " +
                    d.string(),
                d / "log"),
            0);
  // a straight-segment polygon of 400 sides on the latitude circle
  EXPECT_NEAR(read_json(d / "holonomy.json")["phase"].get<double>(), -pi * (1 - std::cos(1.0)), 1e-4);
  EXPECT_TRUE(fs::exists(d / "refinement.csv"));
}

TEST(Cli, OpenContourFlaggedClosedIsInputError) {
  const fs::path d = scratch("open");
  write_text_file((d / "open.csv").string(), "t,theta,phi\n0,1.0,0.0\n1,1.1,0.5\n2,1.2,1.0\n");
  EXPECT_EQ(run("holonomy --model spin_half --contour " + (d / "open.csv").string() + " --closed --out " + d.string(),
                d / "log"),
            2);
  EXPECT_EQ(run("holonomy --model spin_half --contour " + (d / "open.csv").string() + " --out " + d.string(), d / "log"),
            0);
  write_text_file((d / "bad.csv").string(), "t,theta,phi\n0,1.0,0.0\n1,oops,0.5\n");
  EXPECT_EQ(run("holonomy --model spin_half --contour " + (d / "bad.csv").string() + " --out " + d.string(), d / "log"),
            2);
  EXPECT_NE(read_text_file((d / "log").string()).find("line 3"), std::string::npos);
}

TEST(Cli, InputErrors) {
  const fs::path d = scratch("errors");
  EXPECT_EQ(run("holonomy --segments notanumber", d / "log"), 2);
  EXPECT_EQ(run("holonomy --model nope --out " + d.string(), d / "log"), 2);
  EXPECT_EQ(run("holonomy --integrator euler --out " + d.string(), d / "log"), 2);
  EXPECT_EQ(run("frobnicate", d / "log"), 2);
  EXPECT_EQ(run("", d / "log"), 2);
  EXPECT_EQ(run("--help", d / "log"), 0);
  EXPECT_EQ(run("brachistochrone --target hadamard --out " + d.string(), d / "log"), 2);
  EXPECT_EQ(run("holonomy --model custom:" + (d / "missing.json").string() + " --out " + d.string(), d / "log"), 2);
}

TEST(Cli, StokesVerifyAbelianCap) {
  const fs::path d = scratch("stokes");
  ASSERT_EQ(run("stokes-verify --model spin_half --loop latitude:1.2 --grids 16 32 64 --reference-segments 4000 --out " +
                    d.string(),
                d / "log"),
            0);
  const json s = read_json(d / "stokes.json");
  EXPECT_GT(s["fitted_order"].get<double>(), 1.8);
  const std::string table = read_text_file((d / "stokes.csv").string());
  EXPECT_EQ(table.substr(0, table.find('\n')), "n,h,deviation,abelian_deviation,max_commutator");
}

TEST(Cli, StokesVerifySurfaceFile) {
  const fs::path d = scratch("stokes_file");
  const Surface s = builtin_surface("tripod_fixture", 3, 64, 64);
  write_text_file((d / "surface.json").string(), to_json(s).dump());
  write_text_file((d / "loop.csv").string(), contour_to_csv(s.boundary()));
  ASSERT_EQ(run("stokes-verify --model tripod --surface " + (d / "surface.json").string() + " --contour " +
                    (d / "loop.csv").string() + " --out " + d.string(),
                d / "log"),
            0);
  EXPECT_LT(read_json(d / "stokes.json")["deviation"].get<double>(), 1e-3);
  // a boundary that does not match the contour
  write_text_file((d / "other.csv").string(), contour_to_csv(builtin_surface("tripod_fixture", 3, 32, 4).boundary()));
  EXPECT_EQ(run("stokes-verify --model tripod --surface " + (d / "surface.json").string() + " --contour " +
                    (d / "other.csv").string() + " --out " + d.string(),
                d / "log"),
            2);
}

TEST(Cli, BrachistochroneOpenIdentity) {
  const fs::path d = scratch("brach");
  ASSERT_EQ(run("brachistochrone --target identity --mode open --seeds 2 --out " + d.string(), d / "log"), 0);
  const json s = read_json(d / "solution.json");
  EXPECT_LT(s["fidelity_error"].get<double>(), 1e-5);
  const Contour c = contour_from_csv(read_text_file((d / "trajectory.csv").string()));
  EXPECT_EQ(c.dim(), 3);
  const std::string runs = read_text_file((d / "runs.csv").string());
  EXPECT_EQ(std::count(runs.begin(), runs.end(), '\n'), 3);
}

TEST(Cli, SweepIsReproducibleFromItsRunFile) {
  const fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::string args = "qgl-sweep --alphas 0.7 --seeds 2 --n1 16 --n2 8 --max-iterations 60 --jobs 2 --out ";
  const int code = run(args + a.string(), a / "log");
  ASSERT_TRUE(code == 0 || code == 3) << read_text_file((a / "log").string());
  ASSERT_TRUE(fs::exists(a / "sweep.csv"));
  EXPECT_EQ(read_text_file((a / "sweep.csv").string()).substr(0, std::string(sweep_csv_header).size()),
            sweep_csv_header);
  EXPECT_EQ(run("--config " + (a / "run.toml").string() + " qgl-sweep --out " + b.string(), b / "log"), code)
      << read_text_file((b / "log").string());
  EXPECT_EQ(read_text_file((a / "sweep.csv").string()), read_text_file((b / "sweep.csv").string()));
  EXPECT_EQ(read_text_file((a / "failures.csv").string()), read_text_file((b / "failures.csv").string()));
  EXPECT_EQ(read_json(a / "run.json")["config"]["alphas"], read_json(b / "run.json")["config"]["alphas"]);
}

TEST(Cli, SweepRejectsAbelianModel) {
  const fs::path d = scratch("sweep_bad");
  EXPECT_EQ(run("qgl-sweep --model spin_half --out " + d.string(), d / "log"), 2);
}
