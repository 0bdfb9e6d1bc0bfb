import pytest

from clickpol.config import ConfigError, defaults, load, load_text


def test_empty_document_gives_defaults():
    assert load_text("").to_dict() == defaults()
    assert load(None).to_dict() == defaults()


def test_values_and_overrides():
    cfg = load_text("state:\n  lambda: 0.2\nscan:\n  step: 1\n", {("scan", "step"): 2.5})
    assert cfg["state"]["lambda"] == 0.2
    assert cfg["scan"]["step"] == 2.5
    assert cfg["detector"]["bins"] == 8


def test_numeric_strings_are_accepted():
    assert load_text("oracle:\n  tolerance: 1e-8\n")["oracle"]["tolerance"] == 1e-8


@pytest.mark.parametrize("text, line, field", [
    ("state:\n  lambda: 0.2\n  lamda: 0.3\n", 3, "state.lamda"),
    ("state:\n  lambda: 1.5\n", 2, "state.lambda"),
    ("detector:\n  bins: 8\n\nscan:\n  step: -1\n", 5, "scan.step"),
    ("scan:\n  outputs: [second-order, fourth-order]\n", 2, "scan.outputs"),
    ("stat:\n  lambda: 0.2\n", 1, "stat"),
    ("scan:\n  start: 10\n  stop: 5\n", 3, "scan.stop"),
    ("scan:\n  axis: nbar\n", 2, "scan.axis"),
    ("detector:\n  bins: 7\n", 2, "detector.bins"),
])
def test_errors_carry_line_and_field(text, line, field):
    with pytest.raises(ConfigError) as info:
        load_text(text)
    assert info.value.line == line
    assert info.value.field == field
    assert f"line {line}" in str(info.value)


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as info:
        load_text("state:\n  lambda: [0.2\n")
    assert info.value.line is not None


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigError):
        load_text("- 1\n- 2\n")


def test_bad_override_names_field():
    with pytest.raises(ConfigError) as info:
        load_text("", {("detector", "efficiency"): 2.0})
    assert info.value.field == "detector.efficiency"


def test_missing_file():
    with pytest.raises(ConfigError):
        load("/nonexistent/config.yaml")


def test_repository_configs_are_valid():
    import pathlib

    root = pathlib.Path(__file__).resolve().parent.parent / "configs"
    files = sorted(root.glob("*.yaml"))
    assert files
    for path in files:
        load(str(path))
    assert load(str(root / "example_full.yaml")).to_dict() == defaults()
