"""End-to-end command-line runs: exit codes, outputs, determinism."""
import json
import re

import numpy as np
import pytest

from specstream.cli import LAWCHECK_FLAG_BUDGET, RunConfig, main
from specstream.ensembles import EnsembleSpec, sample_gue
from specstream.laws import LawSpec, convergence_gap, esd_from_spectrum
from specstream.linalg import SpectrumSample, eig_hermitian
from specstream.streamio import StreamData, read_stream, write_stream


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def gaussian_stream(path, p=20, total=300, seed=11):
    r = np.random.default_rng(seed)
    s = StreamData(t=np.arange(1.0, total + 1.0),
                   values=r.standard_normal((p, total)),
                   names=tuple(f"s{i}" for i in range(p)))
    write_stream(str(path), s)
    return s


class TestSimulate:
    def test_deterministic_bytes(self, tmp_path, capsys):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        code1, out, _ = run(capsys, "simulate", "--preset", "ieee118",
                            "--output", a, "--seed", "7")
        code2, _, _ = run(capsys, "simulate", "--preset", "ieee118",
                          "--output", b, "--seed", "7")
        assert code1 == code2 == 0
        assert "118 sensors x 2500 samples" in out
        assert (tmp_path / "a.csv").read_bytes() == \
            (tmp_path / "b.csv").read_bytes()

    def test_round_trip_identical_stream(self, tmp_path, capsys):
        path = str(tmp_path / "s.csv")
        code, _, _ = run(capsys, "simulate", "--preset", "noise",
                         "--output", path, "--seed", "3")
        assert code == 0
        back = read_stream(path)
        assert back.values.shape == (118, 2500)
        assert np.array_equal(back.t, np.arange(1.0, 2501.0))
        assert back.meta["units"] == "voltage-deviation"
        # a second read sees the same in-memory stream, value-exact
        again = read_stream(path)
        assert np.array_equal(back.values, again.values)

    def test_seeds_differ(self, tmp_path, capsys):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        run(capsys, "simulate", "--preset", "noise", "--output", a,
            "--seed", "1")
        run(capsys, "simulate", "--preset", "noise", "--output", b,
            "--seed", "2")
        assert (tmp_path / "a.csv").read_bytes() != \
            (tmp_path / "b.csv").read_bytes()


class TestEnvSeed:
    def test_env_default_matches_explicit(self, tmp_path, capsys,
                                          monkeypatch):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        monkeypatch.setenv("SPECSTREAM_SEED", "5")
        run(capsys, "simulate", "--preset", "noise", "--output", a)
        monkeypatch.delenv("SPECSTREAM_SEED")
        run(capsys, "simulate", "--preset", "noise", "--output", b,
            "--seed", "5")
        assert (tmp_path / "a.csv").read_bytes() == \
            (tmp_path / "b.csv").read_bytes()

    def test_bad_env_seed_is_error(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPECSTREAM_SEED", "lots")
        code, _, err = run(capsys, "simulate", "--preset", "noise",
                           "--output", str(tmp_path / "x.csv"))
        assert code == 1
        assert "SPECSTREAM_SEED" in err


class TestLawcheck:
    def test_noise_stream_clean(self, tmp_path, capsys):
        stream = str(tmp_path / "noise.csv")
        run(capsys, "simulate", "--preset", "noise", "--output", stream,
            "--seed", "3")
        base = str(tmp_path / "lc")
        code, out, _ = run(capsys, "lawcheck", "--input", stream,
                           "--stride", "100", "--output", base, "--seed", "3")
        assert code == 0
        report = json.loads((tmp_path / "lc.json").read_text())
        assert report["windows"] == 23
        assert report["flagged"] == 0
        assert report["first_flag_t_end"] is None
        assert "first flag at none" in out

    def test_event_stream_anomalous(self, tmp_path, capsys):
        stream = str(tmp_path / "evt.csv")
        run(capsys, "simulate", "--preset", "ieee118", "--output", stream,
            "--seed", "7")
        base = str(tmp_path / "lc")
        code, out, _ = run(capsys, "lawcheck", "--input", stream,
                           "--stride", "50", "--output", base, "--seed", "7")
        assert code == 2
        report = json.loads((tmp_path / "lc.json").read_text())
        assert report["flagged_fraction"] > LAWCHECK_FLAG_BUDGET
        # first flagged window straddles the 30 MW step onset at t=501
        assert report["first_flag_t_end"] == 540.0
        rows = (tmp_path / "lc.csv").read_text().splitlines()
        assert rows[0] == "t_end,name,value,ratio,flag"
        assert sum(r.split(",")[1] == "MSR" for r in rows[1:]) == \
            report["windows"]

    def test_indicator_column(self, tmp_path, capsys):
        stream = tmp_path / "small.csv"
        gaussian_stream(stream, p=30, total=300, seed=0)
        base = str(tmp_path / "lc")
        code, _, _ = run(capsys, "lawcheck", "--input", str(stream),
                         "--window", "100", "--stride", "100",
                         "--indicator", "moment-2", "--output", base,
                         "--seed", "0")
        assert code == 0
        rows = (tmp_path / "lc.csv").read_text().splitlines()
        assert sum(r.split(",")[1] == "moment-2" for r in rows[1:]) == 3

    def test_missing_input(self, tmp_path, capsys):
        code, _, err = run(capsys, "lawcheck", "--input",
                           str(tmp_path / "nope.csv"))
        assert code == 1
        assert err.startswith("error:")

    def test_empty_input_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        code, _, err = run(capsys, "lawcheck", "--input", str(bad))
        assert code == 1
        assert "line 1: empty file" in err


class TestUstat:
    def test_h0_exit_zero(self, tmp_path, capsys):
        path = tmp_path / "h0.csv"
        gaussian_stream(path, seed=11)
        rep = str(tmp_path / "u.json")
        code, out, _ = run(capsys, "ustat", "--input", str(path), "--q", "5",
                           "--ng", "50", "--output", rep, "--seed", "1")
        assert code == 0
        assert "-> H0" in out
        payload = json.loads((tmp_path / "u.json").read_text())
        assert payload["decision"] == "H0"
        assert payload["ratio"] < payload["threshold"]

    def test_injected_change_exit_two(self, tmp_path, capsys):
        s = gaussian_stream(tmp_path / "tmp.csv", seed=11)
        vals = s.values.copy()
        vals[:, -50:] *= 3.0
        path = tmp_path / "h1.csv"
        write_stream(str(path), StreamData(t=s.t, values=vals, names=s.names))
        code, out, _ = run(capsys, "ustat", "--input", str(path), "--q", "5",
                           "--ng", "50", "--seed", "1")
        assert code == 2
        assert "-> H1" in out

    def test_q_one_rejected(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        gaussian_stream(path)
        code, _, err = run(capsys, "ustat", "--input", str(path), "--q", "1")
        assert code == 1
        assert "--q must be at least 2" in err

    def test_insufficient_samples(self, tmp_path, capsys):
        path = tmp_path / "short.csv"
        gaussian_stream(path, total=120)
        code, _, err = run(capsys, "ustat", "--input", str(path), "--q", "5",
                           "--ng", "50")
        assert code == 1
        assert "needs q*ng=250" in err


class TestFreeprob:
    def test_anticommutator_unit(self, tmp_path, capsys):
        out = str(tmp_path / "fp.csv")
        code, stdout, _ = run(capsys, "freeprob", "--polynomial",
                              "anticommutator", "--laws",
                              "semicircle,semicircle", "--n", "150",
                              "--draws", "2", "--grid-points", "60",
                              "--output", out, "--seed", "3")
        assert code == 0
        m = re.search(r"KS\(algorithm vs MC\) = ([0-9.]+)", stdout)
        assert m and float(m.group(1)) < 0.08
        rows = (tmp_path / "fp.csv").read_text().splitlines()
        assert rows[0] == "x,density_algorithm,density_mc"
        assert len(rows) == 61

    def test_unknown_polynomial_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["freeprob", "--polynomial", "cube"])
        assert exc.value.code == 2

    def test_bad_law_token(self, capsys):
        code, _, err = run(capsys, "freeprob", "--laws", "banana")
        assert code == 1
        assert "not recognized" in err


class TestSpectrum:
    def test_gue_gap_matches_library(self, tmp_path, capsys):
        out = str(tmp_path / "sp.csv")
        code, stdout, _ = run(capsys, "spectrum", "--ensemble", "gue",
                              "--n", "300", "--output", out, "--seed", "1")
        assert code == 0
        printed = float(re.search(r"gap vs semicircle = ([0-9.]+)",
                                  stdout).group(1))
        m = sample_gue(EnsembleSpec("gue", 300, seed=1))
        vals = eig_hermitian(m.entries).values / np.sqrt(300)
        esd = esd_from_spectrum(SpectrumSample(vals, (300, 300),
                                               "eigen-hermitian"))
        want = convergence_gap(esd, LawSpec("semicircle"))
        assert abs(printed - want) < 1e-5
        rows = (tmp_path / "sp.csv").read_text().splitlines()
        assert rows[0] == "x,esd_cdf,law_cdf,law_density"

    def test_stream_window_overlay(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        gaussian_stream(path, p=20, total=300, seed=2)
        out = str(tmp_path / "sp.csv")
        code, stdout, _ = run(capsys, "spectrum", "--input", str(path),
                              "--window", "100", "--output", out)
        assert code == 0
        assert "marchenko-pastur" in stdout
        assert (tmp_path / "sp.csv").exists()

    def test_lue_requires_t(self, capsys):
        code, _, err = run(capsys, "spectrum", "--ensemble", "lue")
        assert code == 1
        assert "--t is required" in err

    def test_needs_some_source(self, capsys):
        code, _, err = run(capsys, "spectrum")
        assert code == 1
        assert "need --input or --ensemble" in err


class TestRunConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(window_t=1)
        with pytest.raises(ValueError):
            RunConfig(stride=0)
        with pytest.raises(ValueError):
            RunConfig(alpha=1.0)
        with pytest.raises(ValueError):
            RunConfig(indicator="moment-9")

    def test_defaults(self):
        cfg = RunConfig()
        assert (cfg.window_t, cfg.q, cfg.n_g) == (240, 5, 50)
