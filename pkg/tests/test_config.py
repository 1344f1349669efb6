import pytest

from rsdna.config import ENV_VAR, Settings, config_path, load_settings, parse_settings
from rsdna.errors import ConfigurationError
from rsdna.learner import MaskSpec


def test_defaults():
    s = parse_settings("")
    assert s == Settings()
    assert s.mode == "identity" and s.rs.n == 64 and s.rs.k == 48 and s.mask is None


def test_full_example():
    s = parse_settings("""
[pipeline]
mode = learned
rs_n = 8
rs_k = 6
rows_per_block = 4
mask = 1,2  # trailing comment
[model]
seed = 5
[loss]
alpha = 0
[train]
learning_rate = 0.01
epochs = 3
max_stem = none
normalize_hairpin = no
clip_norm = none
[channel]
substitution_rate = 0.02
[hairpin]
s_min = 2
[thermo]
strand_concentration = 1e-6
""")
    assert s.mode == "learned" and (s.rs.n, s.rs.k) == (8, 6) and s.rows_per_block == 4
    assert s.mask == MaskSpec((1, 2))
    assert s.model.seed == 5 and s.loss.alpha == 0.0
    assert s.train.learning_rate == 0.01 and s.train.epochs == 3 and s.train.clip_norm is None
    assert s.train.surrogate.max_stem is None and s.train.surrogate.normalize_hairpin is False
    assert s.train.surrogate.hairpin.s_min == 2 == s.hairpin.s_min
    assert s.channel.substitution_rate == 0.02 and s.thermo.strand_concentration == 1e-6


def test_mask_keywords():
    assert parse_settings("[pipeline]\nmask = none\n").mask == MaskSpec.none()
    assert parse_settings("[pipeline]\nmask = default\n").mask is None


@pytest.mark.parametrize("text", [
    "[bogus]\nx = 1\n",
    "[pipeline]\ncolour = red\n",
    "[pipeline]\nmode = fancy\n",
    "[pipeline]\nrows_per_block = 0\n",
    "[pipeline]\nrs_k = many\n",
    "[train]\nstraight_through = maybe\n",
    "[channel]\nsubstitution_rate = 2\n",
    "[pipeline]\nrs_n = 300\n",
    "not an ini file",
])
def test_rejected(text):
    with pytest.raises(ConfigurationError):
        parse_settings(text)


def test_env_var_and_explicit_path(tmp_path):
    a = tmp_path / "a.ini"
    b = tmp_path / "b.ini"
    a.write_text("[model]\nseed = 1\n")
    b.write_text("[model]\nseed = 2\n")
    env = {ENV_VAR: str(a)}
    assert config_path(None, {}) is None
    assert load_settings(None, {}) == Settings()
    assert load_settings(None, env).model.seed == 1
    assert load_settings(b, env).model.seed == 2
    with pytest.raises(OSError):
        load_settings(tmp_path / "missing.ini", {})
