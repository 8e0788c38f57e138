import pytest

from rainbow_qae.config import BUNDLED, ConfigError, bundled_config, parse_config
from rainbow_qae.payoff import PayoffMethod

GOOD = """\
market:
  s0: [193.97, 189.12]
  mu_daily: [5.096e-4, 6.255e-4]
  covariance:
    - [3.35e-4, 2.57e-4]
    - [2.57e-4, 4.18e-4]
  strike: 190
  horizon_days: 250
quantum:
  m: 2
  P: 1
  R: auto
  method: integration
"""


def test_parse_good():
    run = parse_config(GOOD)
    assert run.market.s0 == (193.97, 189.12)
    assert run.pricing.method is PayoffMethod.INTEGRATION
    assert run.pricing.width is None and run.pricing.frac_bits == 1
    assert run.resolved()["quantum"]["method"] == "integration"


def test_exponent_without_decimal_point():
    run = parse_config(GOOD.replace("3.35e-4", "3e-4"))
    assert run.market.covariance[0][0] == 3e-4


@pytest.mark.parametrize(
    "edit, line, field",
    [
        (("    - [2.57e-4, 4.18e-4]\n", ""), 4, "market.covariance"),
        (("4.18e-4]", "x]"), 6, "market.covariance[1][1]"),
        (("  strike: 190\n", ""), 1, "market.strike"),
        (("  m: 2", "  m: 0"), 10, "quantum.m"),
        (("  m: 2", "  m: 2.5"), 10, "quantum.m"),
        (("  method: integration", "  method: lookup"), 13, "quantum.method"),
        (("  P: 1", "  P: 1\n  shots: many"), 12, "quantum.shots"),
        (("  R: auto", "  R: auto\n  colour: red"), 13, "quantum.colour"),
    ],
)
def test_errors_are_line_anchored(edit, line, field):
    text = GOOD.replace(*edit)
    with pytest.raises(ConfigError) as info:
        parse_config(text, "run.yaml")
    assert str(info.value).startswith(f"run.yaml:{line}: {field}")


def test_mismatched_mu():
    with pytest.raises(ConfigError, match="mu_daily"):
        parse_config(GOOD.replace("[5.096e-4, 6.255e-4]", "[5.096e-4]"))


def test_malformed_yaml():
    with pytest.raises(ConfigError, match="malformed YAML"):
        parse_config("market: [1, 2\n")


def test_bundled_configs_load():
    for name in BUNDLED:
        assert bundled_config(name).source == f"{name}.yaml"
    with pytest.raises(ConfigError):
        bundled_config("nope")


def test_replace_ignores_none():
    run = parse_config(GOOD)
    assert run.replace(epsilon=None, seed=9).pricing.seed == 9
