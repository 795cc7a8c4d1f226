import json

import numpy as np
import pytest

from securebf.antenna import mask_angles
from securebf.scenario import (
    ScenarioError,
    ScenarioFile,
    db_to_lin,
    derived_seed,
    load_scenario,
    default_scenario,
    parse_sweep,
    random_scenario,
)


def _write(tmp_path, text, name="s.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_gets_defaults(tmp_path):
    p = _write(tmp_path, "n_su: 1\nn_eve: 0\nn_pu: 0\nsu_directions_deg: [[90, 5]]\n")
    sc = load_scenario(p)
    assert sc.n_su == 1 and sc.n_eve == 0 and sc.n_pu == 0
    assert sc.gamma_th_db == ScenarioFile.gamma_th_db
    assert sc.n1 == 2 and sc.n2 == 4
    ch = sc.channels()
    assert ch.M == 1 and ch.K == 0 and ch.Q == 0


def test_probability_bound_is_named(tmp_path):
    p = _write(tmp_path, "su_directions_deg: [[90, 5]]\np_out_interference: 1.5\n")
    with pytest.raises(ScenarioError) as exc:
        load_scenario(p)
    assert exc.value.field == "p_out_interference"
    assert exc.value.line == 2
    assert "(0, 1)" in str(exc.value)


def test_type_and_unknown_key_errors(tmp_path):
    with pytest.raises(ScenarioError, match="expected float"):
        load_scenario(_write(tmp_path, "su_directions_deg: [[90, 5]]\ngamma_th_db: abc\n"))
    with pytest.raises(ScenarioError, match="unknown key") as exc:
        load_scenario(_write(tmp_path, "su_directions_deg: [[90, 5]]\ngamma_th: 3\n"))
    assert exc.value.line == 2
    with pytest.raises(ScenarioError, match="n_eve"):
        load_scenario(_write(tmp_path, "su_directions_deg: [[90, 5]]\nn_eve: 2\n"))
    with pytest.raises(ScenarioError):
        load_scenario(_write(tmp_path, "eve_directions_deg: [[90, 5]]\n"))


def test_parse_error_has_line(tmp_path):
    with pytest.raises(ScenarioError) as exc:
        load_scenario(_write(tmp_path, "su_directions_deg: [[90, 5]\n"))
    assert exc.value.line is not None


def test_default_scenario_values():
    sc = default_scenario()
    assert (sc.n_pu, sc.n_su, sc.n_eve) == (2, 2, 3)
    assert sc.gamma_th_db == 15.0 and sc.i_th_db == -20.0
    assert sc.p_out_interference == 0.1 and sc.p_out_secrecy == 0.1
    assert sc.sll_db == 20.0 and sc.phi_a_3db_deg == 70.0 and sc.phi_e_3db_deg == 15.0
    tg = sc.targets()
    assert tg.gamma_th == pytest.approx(db_to_lin(15.0))
    assert tg.i_th == pytest.approx(0.01)


def test_manifest_round_trip(tmp_path):
    sc = default_scenario().replace(seed=17)
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps({"scenario": sc.resolved()}))
    back = load_scenario(p)
    assert back == sc
    np.testing.assert_array_equal(back.channels().eve_est, sc.channels().eve_est)


def test_channels_deterministic_per_seed():
    a = random_scenario(2).channels()
    b = random_scenario(2).channels()
    c = random_scenario(2).replace(seed=3).channels()
    np.testing.assert_array_equal(a.su, b.su)
    assert not np.array_equal(a.su, c.su)


def test_random_placement_regions():
    for seed in range(5):
        sc = random_scenario(seed)
        from securebf.antenna import Direction

        for d in sc.su_directions_deg:
            assert abs(np.rad2deg(mask_angles(Direction.from_degrees(*d))[1])) <= 6.0 + 1e-3
        for d in sc.eve_directions_deg + sc.pu_directions_deg:
            assert abs(np.rad2deg(mask_angles(Direction.from_degrees(*d))[1])) >= 25.0 - 1e-3


def test_eps_default_relative_to_channel_power():
    sc = default_scenario()
    ch = sc.channels()
    nh = sc.n_elements
    mean_pu = np.mean(np.sum(np.abs(ch.pu_est) ** 2, axis=1)) / nh
    assert ch.pu_err[0].covariance[0, 0].real == pytest.approx(0.01 * mean_pu)


def test_parse_sweep():
    np.testing.assert_allclose(parse_sweep("-30:-20:5"), [-30, -25, -20])
    for bad in ("1:2", "5:1:1", "0:1:0"):
        with pytest.raises(ScenarioError):
            parse_sweep(bad)


def test_derived_seeds_differ_by_path():
    a = np.random.default_rng(derived_seed(0, "channel-synthesis")).random()
    b = np.random.default_rng(derived_seed(0, "randomization-candidates")).random()
    assert a != b
