import json
import math
import subprocess
import sys

import numpy as np
import pytest

from arccover.experiments import (
    DEFAULT_BASE_SEED,
    ExperimentConfig,
    derive_seed,
    preset_config,
    run_experiment,
    scale_sample,
    vacancy_frequency,
)
from arccover.seeding import derive_seeds
from arccover.tails import TailFunction, parse_tail
from arccover.torus import CoverResult, run_to_cover


class TestDeriveSeed:
    def test_pure_function(self):
        assert derive_seed(123, 10, 5) == derive_seed(123, 10, 5)

    def test_distinct_over_grid(self):
        # memory-bounded version of the collision scan: 2048^2 pairs per base
        grid = 2048
        reps = np.arange(grid, dtype=np.uint64)
        for base in (0x9E3779B97F4A7C15, 12345, 2**63 + 11):
            seen = np.concatenate([derive_seeds(base, n, reps) for n in range(grid)])
            assert np.unique(seen).size == seen.size

    def test_vectorized_matches_scalar(self):
        reps = np.arange(50, dtype=np.uint64)
        got = derive_seeds(987, 321, reps)
        want = np.array([derive_seed(987, 321, int(r)) for r in reps], dtype=np.uint64)
        assert np.array_equal(got, want)

    def test_avalanche(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            base, n, rep = (int(x) for x in rng.integers(0, 2**62, 3))
            ref = derive_seed(base, n, rep)
            bit = int(rng.integers(0, 62))
            which = int(rng.integers(0, 3))
            args = [base, n, rep]
            args[which] ^= 1 << bit
            flipped = derive_seed(*args)
            assert flipped != ref
            assert bin(flipped ^ ref).count("1") >= 10


class TestScaleSample:
    def test_bstar(self):
        res = CoverResult(n=100, tau=60, T=50.0, max_radius=5, seed=1)
        assert scale_sample("bstar", parse_tail("logpow:0"), 100, res) == 0.5

    def test_gumbel_centering(self):
        res = CoverResult(n=100, tau=500, T=100.0 * math.log(100.0), max_radius=1, seed=1)
        assert scale_sample("gumbel", TailFunction.constant(1), 100, res) == pytest.approx(0.0, abs=1e-12)

    def test_exponential_unit(self):
        f = TailFunction.slow_log()
        res = CoverResult(n=10**4, tau=3, T=1.0 / f.value(10**4), max_radius=10**4, seed=1)
        assert scale_sample("exponential", f, 10**4, res) == pytest.approx(1.0, rel=1e-12)

    def test_monotone_in_T(self):
        f = TailFunction.geometric(0.5)
        lo = CoverResult(n=50, tau=5, T=10.0, max_radius=9, seed=1)
        hi = CoverResult(n=50, tau=5, T=11.0, max_radius=9, seed=1)
        for phase in ("gumbel", "compact", "bstar", "preexp", "exponential"):
            assert scale_sample(phase, f, 50, lo) < scale_sample(phase, f, 50, hi)

    def test_infinite_mean_rejected(self):
        res = CoverResult(n=100, tau=5, T=10.0, max_radius=3, seed=1)
        with pytest.raises(ValueError):
            scale_sample("gumbel", TailFunction.slow_log(), 100, res)


class TestConfigValidation:
    def test_phase_checked(self):
        with pytest.raises(ValueError):
            ExperimentConfig(phase="nope", tail="const:1", n_list=(10,))

    def test_replicates_positive(self):
        with pytest.raises(ValueError):
            ExperimentConfig(phase="gumbel", tail="const:1", n_list=(10,), replicates=0)

    def test_n_list_increasing(self):
        with pytest.raises(ValueError):
            ExperimentConfig(phase="gumbel", tail="const:1", n_list=(100, 100))

    def test_gumbel_needs_finite_mean(self):
        with pytest.raises(ValueError):
            ExperimentConfig(phase="gumbel", tail="pow:-0.5", n_list=(10,))

    def test_presets_valid(self):
        for name in ("gumbel_const", "bstar", "shepp_pi", "calibration"):
            cfg = preset_config(name, output_path="/tmp/x")
            assert cfg.base_seed == DEFAULT_BASE_SEED


class TestRunExperiment:
    @pytest.fixture()
    def small_config(self, tmp_path):
        return ExperimentConfig(
            phase="gumbel", tail="const:1", n_list=(64, 128), replicates=25,
            base_seed=99, output_path=str(tmp_path / "run"),
        )

    def test_row_count_and_schema(self, small_config):
        paths, _ = run_experiment(small_config)
        lines = paths["csv"].read_text().splitlines()
        assert lines[0] == "phase,family,n,replicate,seed,tau,T,scaled"
        assert len(lines) == 1 + 2 * 25

    def test_rows_reproduce_run_to_cover(self, small_config):
        paths, _ = run_experiment(small_config)
        row = paths["csv"].read_text().splitlines()[1].split(",")
        n, rep, seed = int(row[2]), int(row[3]), int(row[4])
        assert seed == derive_seed(99, n, rep)
        res = run_to_cover(parse_tail("const:1"), n, seed)
        assert res.tau == int(row[5])
        assert res.T == float(row[6])

    def test_rerun_byte_identical(self, small_config):
        paths, _ = run_experiment(small_config)
        first = paths["csv"].read_bytes(), paths["summary"].read_bytes()
        paths, _ = run_experiment(small_config)
        assert (paths["csv"].read_bytes(), paths["summary"].read_bytes()) == first

    def test_worker_count_invariance(self, small_config):
        outputs = []
        for workers in (1, 2, 5):
            paths, _ = run_experiment(small_config, workers=workers)
            outputs.append((paths["csv"].read_bytes(), paths["summary"].read_bytes()))
        assert outputs[0] == outputs[1] == outputs[2]

    def test_manifest_fields(self, small_config):
        paths, _ = run_experiment(small_config)
        manifest = json.loads(paths["manifest"].read_text())
        assert manifest["prng"] == "numpy.random.PCG64"
        assert manifest["config"]["base_seed"] == 99
        assert manifest["per_n_replicates"] == {"64": 25, "128": 25}
        assert manifest["wall_clock_seconds"] > 0

    def test_shepp_pi_phase(self, tmp_path):
        cfg = ExperimentConfig(phase="shepp_pi", alpha_list=(0.3,), n_list=(50,), replicates=40,
                               base_seed=7, output_path=str(tmp_path / "pi"))
        _, summary = run_experiment(cfg)
        group = summary["groups"]["alpha=0.3|n=50"]
        assert 0.0 <= group["pi_hat"] <= 1.0
        assert group["count"] == 40

    def test_dimension_phase(self, tmp_path):
        cfg = ExperimentConfig(phase="dimension", alpha_list=(0.5,), n_list=(100,), replicates=60,
                               base_seed=7, output_path=str(tmp_path / "dim"))
        _, summary = run_experiment(cfg)
        group = summary["groups"]["alpha=0.5|n=100"]
        assert group["accepted"] <= group["count"]

    def test_calibration_phase(self, tmp_path):
        cfg = ExperimentConfig(phase="calibration", n_list=(500,), replicates=200,
                               base_seed=7, output_path=str(tmp_path / "cal"))
        _, summary = run_experiment(cfg)
        assert "ks" in summary["groups"]["coupon|n=500"]


class TestVacancyFrequency:
    def test_matches_exact_formula(self):
        from arccover.torus import vacancy_probability_exact

        f = TailFunction.constant(1)
        n = 100
        t = 0.5 * n * math.log(n)
        freq, joint = vacancy_frequency(f, n, t, (0, 50), replicates=2000, base_seed=5)
        p = vacancy_probability_exact(f, n, t)
        sd = math.sqrt(p * (1 - p) / 2000)
        assert abs(freq[0] - p) <= 4 * sd


class TestCLI:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "arccover", *args],
            capture_output=True, text=True, timeout=600,
        )

    def test_cover_small(self, tmp_path):
        out = tmp_path / "g"
        res = self.run_cli("cover", "--phase", "gumbel", "--tail", "const:1",
                           "--n", "64", "--replicates", "20", "--seed", "5", "--out", str(out))
        assert res.returncode == 0
        assert out.with_suffix(".csv").exists()

    def test_bad_tail_exits_2(self):
        res = self.run_cli("cover", "--phase", "gumbel", "--tail", "bogus:1", "--n", "64",
                           "--replicates", "5")
        assert res.returncode == 2

    def test_assert_gate_failure_exits_3(self, tmp_path):
        # 12 replicates cannot reach KS <= 0.05 against the Gumbel reference
        res = self.run_cli("cover", "--phase", "gumbel", "--tail", "const:1", "--n", "64",
                           "--replicates", "12", "--seed", "5", "--out", str(tmp_path / "g"),
                           "--assert")
        assert res.returncode == 3

    def test_shepp_series_expect(self):
        res = self.run_cli("shepp-series", "--sequence", "zero", "--N", "10000",
                           "--expect", "converging")
        assert res.returncode == 0
        res = self.run_cli("shepp-series", "--sequence", "zero", "--N", "10000",
                           "--expect", "diverging")
        assert res.returncode == 3

    def test_karamata(self):
        res = self.run_cli("karamata", "--tail", "pow:-0.5", "--x", "10000")
        assert res.returncode == 0
        payload = json.loads(res.stdout)
        assert payload["karamata_ratio"] == pytest.approx(0.5, abs=0.02)

    def test_snapshot(self, tmp_path):
        res = self.run_cli("snapshot", "--tail", "const:1", "--n", "100", "--alpha", "0.5",
                           "--replicates", "300", "--seed", "3", "--out", str(tmp_path / "s.json"),
                           "--assert")
        assert res.returncode == 0, res.stdout + res.stderr

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# tiny smoke run\n"
            "phase = gumbel\n"
            "tail = const:1\n"
            "n = 32, 64\n"
            "replicates = 10\n"
            "seed = 11\n"
            f"out = {tmp_path / 'from_file'}\n"
        )
        res = self.run_cli("cover", "--config", str(cfg))
        assert res.returncode == 0
        lines = (tmp_path / "from_file.csv").read_text().splitlines()
        assert len(lines) == 1 + 20

    def test_dimension_command(self, tmp_path):
        res = self.run_cli("dimension", "--alpha", "0.5", "--n", "500", "--replicates", "150",
                           "--seed", "9", "--out", str(tmp_path / "d.json"))
        assert res.returncode == 0
        payload = json.loads((tmp_path / "d.json").read_text())
        assert payload["accepted"] >= 30

    def test_calibrate(self, tmp_path):
        res = self.run_cli("calibrate", "--K", "2000", "--replicates", "400", "--seed", "2",
                           "--out", str(tmp_path / "cal"), "--assert")
        assert res.returncode == 0, res.stdout + res.stderr
