import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.exceptions import ConfigParseError, ConfigValidationError
from src.models.affine_model import Objective
from src.models.experiment import PolicyKind
from src.policies.gains import PerturbationLaw
from src.solvers.oracle import optimal_inputs
from src.utils.config_loader import ConfigLoader
from tests.conftest import DATA_DIR, scalar_config, write_config


def test_minimal_config_loads_with_defaults(tmp_path):
    payload = scalar_config()
    del payload["initial_input"]
    del payload["seed"]
    experiment = ConfigLoader.load_config(write_config(tmp_path, payload))
    assert experiment.name == "scalar"
    assert experiment.model.objective is Objective.QUADRATIC_REGULATION
    assert experiment.initial_input.tolist() == [2.0]
    assert experiment.seed == 0
    assert experiment.workers == 1
    assert experiment.replications == 1
    assert experiment.slope_window == pytest.approx(0.1)
    assert experiment.checkpoints[0] == 1 and experiment.checkpoints[-1] == 10
    assert experiment.model.chain.initial_state == 0


def test_name_defaults_to_file_stem(tmp_path):
    payload = scalar_config()
    del payload["name"]
    experiment = ConfigLoader.load_config(write_config(tmp_path, payload, "mon_essai.json"))
    assert experiment.name == "mon_essai"


def test_row_not_stochastic_reports_field(tmp_path):
    payload = scalar_config(
        chain={"P": [[0.5, 0.4], [0.5, 0.5]]},
        states=[{"A": [[2.0]], "b": [1.0]}, {"A": [[1.0]], "b": [0.0]}],
    )
    with pytest.raises(ConfigValidationError) as excinfo:
        ConfigLoader.load_config(write_config(tmp_path, payload))
    assert excinfo.value.field == "chain.P.row1"


def test_revenue_with_positive_matrix_is_rejected(tmp_path):
    payload = scalar_config("revenue_maximization", states=[{"A": [[1.0]], "b": [1.0]}])
    with pytest.raises(ConfigValidationError) as excinfo:
        ConfigLoader.load_config(write_config(tmp_path, payload))
    assert excinfo.value.field == "states[1]"


def test_parse_error_carries_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  "horizon": ,\n}\n', encoding="utf-8")
    with pytest.raises(ConfigParseError) as excinfo:
        ConfigLoader.load_config(path)
    assert excinfo.value.line == 3


def test_missing_file(tmp_path):
    with pytest.raises(ConfigParseError):
        ConfigLoader.load_config(tmp_path / "absent.json")


@pytest.mark.parametrize("overrides, field", [
    ({"horizon": 0}, "horizon"),
    ({"replications": 0}, "replications"),
    ({"seed": -1}, "seed"),
    ({"initial_input": [9.0]}, "initial_input"),
    ({"slope_window": 1.0}, "slope_window"),
    ({"objective": "profit"}, "objective"),
    ({"policies": []}, "policies"),
    ({"policies": [{"kind": "oracle"}, {"kind": "oracle"}]}, "policies[1].name"),
    ({"policies": [{"name": "a/b", "kind": "oracle"}]}, "policies[0].name"),
    ({"policies": [{"kind": "simplex"}]}, "policies[0].kind"),
    ({"checkpoints": [1, 5, 5]}, "checkpoints"),
    ({"checkpoints": [1, 20]}, "checkpoints"),
    ({"target": [1.0, 2.0]}, "target"),
])
def test_invalid_fields(tmp_path, overrides, field):
    with pytest.raises(ConfigValidationError) as excinfo:
        ConfigLoader.load_config(write_config(tmp_path, scalar_config(**overrides)))
    assert excinfo.value.field == field


def test_missing_target_for_regulation(tmp_path):
    payload = scalar_config()
    del payload["target"]
    with pytest.raises(ConfigValidationError) as excinfo:
        ConfigLoader.load_config(write_config(tmp_path, payload))
    assert excinfo.value.field == "target"


@pytest.mark.parametrize("gains, field", [
    ({"gamma": 0.5, "gamma_prime": 0.0}, "policies[0].gains.gamma_prime"),
    ({"gamma": -1.0}, "policies[0].gains.gamma"),
    ({"gamma": 0.5, "N": 2.5}, "policies[0].gains.N"),
    ({"gamma": 0.5, "sigma_lower": 0.5}, "policies[0].gains"),
    ([{"gamma": 0.5}, {"gamma": 0.5}], "policies[0].gains"),
])
def test_invalid_gains(tmp_path, gains, field):
    payload = scalar_config(policies=[{"name": "mspsa", "kind": "mspsa", "gains": gains}])
    with pytest.raises(ConfigValidationError) as excinfo:
        ConfigLoader.load_config(write_config(tmp_path, payload))
    assert excinfo.value.field == field


def test_mspsa_gain_defaults(tmp_path):
    payload = scalar_config(policies=[
        {"name": "mspsa", "kind": "mspsa"},
        {"name": "uniforme", "kind": "mspsa", "gains": {"sigma_lower": 0.25}, "perturbation": "uniform_two_level"},
    ])
    experiment = ConfigLoader.load_config(write_config(tmp_path, payload))
    default, uniform = experiment.policies
    assert default.kind is PolicyKind.MSPSA
    assert default.shared_gains
    assert default.gains[0].gamma == pytest.approx(0.25)
    assert default.gains[0].step_offset == 10
    assert default.gains[0].perturbation_gain == 1.0
    assert uniform.gains[0].gamma == pytest.approx(0.5)
    assert uniform.perturbation is PerturbationLaw.UNIFORM_TWO_LEVEL


def test_scalars_are_broadcast(tmp_path):
    payload = scalar_config(
        target=5.0,
        states=[{"A": [[2.0]], "b": 1.0, "noise_sigma": 0.2}],
        feasible={"lower": 0.0, "upper": 4.0},
        initial_input=1.0,
    )
    experiment = ConfigLoader.load_config(write_config(tmp_path, payload))
    assert experiment.model.target.tolist() == [5.0]
    assert experiment.model.states[0].noise_sigma.tolist() == [0.2]


def test_overrides_replace_top_level_keys(tmp_path):
    payload = scalar_config(horizon=100, checkpoints=[1, 10, 50, 100])
    experiment = ConfigLoader.load_config(
        write_config(tmp_path, payload),
        {"seed": 99, "horizon": 20, "replications": 4, "workers": None},
    )
    assert experiment.seed == 99
    assert experiment.horizon == 20
    assert experiment.replications == 4
    assert experiment.workers == 1
    assert experiment.checkpoints == (1, 10)


def test_generated_eigenvalues_lie_in_interval(tmp_path):
    payload = scalar_config(
        target=[5.0, 5.0, 5.0],
        chain={"self_transition": 0.5},
        generator={"states": 2, "input_dim": 3, "eigenvalue_interval": [-1.5, -0.5], "seed": 3, "margin": 0.2},
        feasible={"lower": 1.0, "upper": 4.0},
        initial_input=2.5,
    )
    del payload["states"]
    experiment = ConfigLoader.load_config(write_config(tmp_path, payload))
    model = experiment.model
    assert model.K == 2 and model.n == 3
    assert_allclose(model.chain.P, [[0.5, 0.5], [0.5, 0.5]])
    for state in model.states:
        assert_allclose(state.A, state.A.T)
        eigenvalues = np.linalg.eigvalsh(state.A)
        assert np.all(eigenvalues >= -1.5 - 1e-9)
        assert np.all(eigenvalues <= -0.5 + 1e-9)
    for x_star in optimal_inputs(model):
        assert experiment.feasible.contains(x_star)


def test_states_and_generator_are_exclusive(tmp_path):
    payload = scalar_config(generator={"states": 1, "input_dim": 1, "eigenvalue_interval": [-1.0, -0.5]})
    with pytest.raises(ConfigValidationError) as excinfo:
        ConfigLoader.load_config(write_config(tmp_path, payload))
    assert excinfo.value.field == "states"


def test_save_and_reload_is_identity(tmp_path):
    original = ConfigLoader.load_config(DATA_DIR / "qr_acceptance.json")
    path = tmp_path / "explicit.json"
    ConfigLoader.save_config(original, path)
    reloaded = ConfigLoader.load_config(path)
    assert reloaded == original
    assert ConfigLoader.config_hash(reloaded) == ConfigLoader.config_hash(original)


def test_config_hash_ignores_output_dir(tmp_path):
    base = ConfigLoader.load_config(write_config(tmp_path, scalar_config(), "a.json"))
    moved = ConfigLoader.load_config(write_config(tmp_path, scalar_config(output_dir="ailleurs"), "b.json"))
    reseeded = ConfigLoader.load_config(write_config(tmp_path, scalar_config(seed=4), "c.json"))
    assert ConfigLoader.config_hash(base) == ConfigLoader.config_hash(moved)
    assert ConfigLoader.config_hash(base) != ConfigLoader.config_hash(reseeded)


@pytest.mark.parametrize("filename", [
    "qr_scalar.json", "rm_scalar.json", "qr_acceptance.json", "rm_acceptance.json", "qr_large.json", "rm_large.json",
])
def test_shipped_configs_load(filename):
    experiment = ConfigLoader.load_config(DATA_DIR / filename)
    assert experiment.horizon >= 1
    assert all(experiment.feasible.contains(x) for x in optimal_inputs(experiment.model))
