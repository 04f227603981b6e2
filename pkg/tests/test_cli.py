import json
import math

import numpy as np
import pytest

from dilatlab import cli

OSC = ["system.N=1", "system.pair_coeff=0", "grid.n=128", "grid.L=10"]


def run(tmp_path, command, *sets, name="out"):
    argv = [command, "-o", str(tmp_path / name)]
    for s in sets:
        argv += ["--set", s]
    return cli.main(argv), tmp_path / name


def load(path):
    return json.loads(path.read_text())


def test_map_calcium(tmp_path, capsys):
    code, out = run(tmp_path, "map", "mapping.species=Ca40+", "mapping.electron_time_s=0.1")
    assert code == 0
    info = load(out / "map.json")
    assert 1 / info["lambda"] == pytest.approx(1.37e-5, abs=0.01e-5)
    assert info["simulator_time_s"] == pytest.approx(0.1 / info["lambda"], rel=1e-12)
    text = capsys.readouterr().out
    assert "1.373e-05" in text


def test_map_identity_and_charge(tmp_path):
    _, out = run(tmp_path, "map", "mapping.mass_ratio=1", name="a")
    assert load(out / "map.json")["r"] == 0.0
    _, out = run(tmp_path, "map", "mapping.mass_ratio=10", "mapping.Q=2", name="b")
    assert load(out / "map.json")["lambda"] == pytest.approx(160.0, rel=1e-14)


def test_manifest_and_config_echo(tmp_path):
    code, out = run(tmp_path, "map", "mapping.Q=2")
    man = load(out / "manifest.json")
    assert man["exit_code"] == 0 and man["config"]["mapping"]["Q"] == 2.0
    assert set(man["versions"]) == {"dilatlab", "numpy", "scipy", "python"}
    echoed = cli.load_config(out / "config.ini")
    assert echoed == man["config"]


@pytest.mark.parametrize("mu", [4.0, 1.0])
def test_verify_passes(tmp_path, mu):
    code, out = run(tmp_path, "verify", f"mapping.mass_ratio={mu}")
    assert code == cli.EXIT_OK
    verdict = load(out / "verdict.json")
    assert verdict["passed"]
    names = [c["name"] for c in verdict["checks"]]
    assert names[:2] == ["spectrum_scaling", "propagator_identity"]


def test_unscaled_potential_fails_check(tmp_path):
    code, out = run(tmp_path, "verify", "mapping.scale_potential=False")
    assert code == cli.EXIT_CHECK
    failed = {c["name"] for c in load(out / "verdict.json")["checks"] if not c["passed"]}
    assert "spectrum_scaling" in failed and "propagator_identity" in failed


@pytest.mark.parametrize(
    "sets",
    [["system.colour=1"], ["mapping.species=Xx1+"], ["grid.n=30"], ["mapping.mass_ratio=-1"], ["nosection"]],
)
def test_config_errors(tmp_path, sets, capsys):
    code, _ = run(tmp_path, "map" if "species" in sets[0] or "mass" in sets[0] else "verify", *sets)
    assert code == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_infeasible(tmp_path):
    assert run(tmp_path, "verify", "mapping.mass_ratio=1000", name="a")[0] == cli.EXIT_INFEASIBLE
    assert run(tmp_path, "verify", "grid.n=128", name="b")[0] == cli.EXIT_INFEASIBLE


def test_evolve_stationary(tmp_path):
    code, out = run(tmp_path, "evolve", *OSC, "initial.kind=eigenstate", "initial.index=2", "propagation.T=10")
    assert code == 0
    data = np.genfromtxt(out / "trajectory.csv", delimiter=",", names=True)
    assert data.dtype.names[:3] == ("time", "norm", "energy")
    np.testing.assert_allclose(data["energy"], 2.5, rtol=1e-10)
    assert np.ptp(data["energy"]) < 1e-12
    assert load(out / "evolve.json")["norm_drift"] < 1e-12


def test_spectrum_finds_unit_line(tmp_path):
    code, out = run(tmp_path, "spectrum", *OSC, "initial.kind=superposition", "initial.indices=[0, 1]",
                    "initial.weights=[1, 1]")
    assert code == 0
    peaks = load(out / "peaks.json")
    assert [round(p["matched_bohr"], 6) for p in peaks["peaks"]] == [1.0]
    assert abs(peaks["peaks"][0]["omega"] - 1.0) <= peaks["resolution"]
    assert peaks["resolution"] == pytest.approx(2 * math.pi / 200, rel=1e-3)


def test_spectrum_simulator_side(tmp_path):
    code, out = run(tmp_path, "spectrum", *OSC, "initial.kind=superposition", "readout.side=simulator")
    assert code == 0
    omegas = [p["omega"] for p in load(out / "peaks.json")["peaks"]]
    np.testing.assert_allclose(omegas, [4.0, 8.0], atol=4 * 2 * math.pi / 200)


def test_qpe_representable_phase(tmp_path):
    # E_s = lam * 0.5 = 2; t = 0.375 pi gives phase (-2 t / 2 pi) mod 1 = 0.625 = 5/8
    code, out = run(tmp_path, "qpe", *OSC, "initial.kind=eigenstate", "qpe.n=3", f"qpe.t_tilde={0.375 * math.pi!r}")
    assert code == 0
    data = load(out / "qpe.json")
    assert data["M_star"] == 5 and data["phase"] == 0.625
    assert data["distribution"][5] == pytest.approx(1.0, abs=1e-10)
    assert data["energies"] == [pytest.approx(0.5, abs=1e-10)]


def test_json_byte_identical(tmp_path):
    sets = (*OSC, "initial.kind=superposition", "qpe.n=6")
    run(tmp_path, "qpe", *sets, name="a")
    run(tmp_path, "qpe", *sets, name="b")
    assert (tmp_path / "a" / "qpe.json").read_bytes() == (tmp_path / "b" / "qpe.json").read_bytes()


def test_config_file_and_tabulated_potential(tmp_path):
    x = np.linspace(-12, 12, 481)
    np.savetxt(tmp_path / "v.txt", np.column_stack([x, 0.5 * x**2]))
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[system]\nN = 1\npair_coeff = 0\npotential = tabulated\n"
        f"potential_file = {tmp_path / 'v.txt'}\n[grid]\nn = 64\nL = 8\n"
    )
    code, out = cli.main(["verify", "-c", str(ini), "-o", str(tmp_path / "o")]), tmp_path / "o"
    assert code == 0
    assert load(out / "manifest.json")["config"]["system"]["potential"] == "tabulated"


def test_missing_config_file(tmp_path):
    assert cli.main(["map", "-c", str(tmp_path / "nope.ini"), "-o", str(tmp_path)]) == cli.EXIT_CONFIG
