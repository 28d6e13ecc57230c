import pytest
from hypothesis import given, strategies as st

from nlse.config import CS_SCHEMA, SWEEP_SCHEMA, ConfigError, load_config, parse_config, resolve


def test_grammar():
    raw = parse_config("# header\nfixture = tanh\n\nfixture = elu  # second\nn=64\n")
    assert raw == {"fixture": ["tanh", "elu"], "n": ["64"]}


def test_errors_carry_line_numbers():
    with pytest.raises(ConfigError, match=":2:"):
        parse_config("n = 4\nnot a pair\n", "x.cfg")
    with pytest.raises(ConfigError):
        parse_config("n =\n")


def test_resolve_types_and_defaults():
    cfg = resolve(parse_config("fixture = tanh\nk = 2\nk = 3\nprobes = off\n"), SWEEP_SCHEMA)
    assert cfg["fixture"] == ("tanh",) and cfg["k"] == (2, 3)
    assert cfg["probes"] is False and cfg["trials"] == 100


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        resolve(parse_config("fixtures = tanh\n"), SWEEP_SCHEMA)


def test_scalar_given_twice():
    with pytest.raises(ConfigError):
        resolve(parse_config("trials = 1\ntrials = 2\n"), CS_SCHEMA)


def test_bad_value():
    with pytest.raises(ConfigError, match="'k'"):
        resolve(parse_config("k = four\n"), CS_SCHEMA)


def test_env_seed_override(monkeypatch):
    monkeypatch.setenv("NLSE_SEED", "42")
    assert resolve(parse_config("base_seed = 1\n"), CS_SCHEMA)["base_seed"] == 42


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(tmp_path / "nope.cfg")


keys = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)
values = st.from_regex(r"[A-Za-z0-9_.\-]{1,12}", fullmatch=True)


@given(st.lists(st.tuples(keys, values), max_size=20))
def test_round_trip(pairs):
    text = "\n".join(f"{k} = {v}" for k, v in pairs)
    expected = {}
    for k, v in pairs:
        expected.setdefault(k, []).append(v)
    assert parse_config(text) == expected
