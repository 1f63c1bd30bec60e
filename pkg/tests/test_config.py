import pytest

from ictmseg.config import ConfigError, parse_config
from ictmseg.drlse import DrlseParams
from ictmseg.ictm import IctmParams

BASE = """\
method = ictm   # solver
input = a.pgm
init = bbox_half
output = out.pgm
"""


def test_defaults_when_unset():
    cfg = parse_config(BASE)
    assert cfg.ictm_params() == IctmParams()
    assert cfg.drlse_params() == DrlseParams()
    assert cfg.edge.sigma == 15.0 and cfg.edge.normalize_input
    assert cfg.snapshot_every == 0 and cfg.timing


def test_flat_keys_apply_to_method():
    cfg = parse_config(BASE + "tau = 3\nlambda = -0.3\nsigma = 2\ntiming = false\n")
    assert cfg.ictm_params() == IctmParams(tau=3.0, lam=-0.3)
    assert cfg.edge.sigma == 2.0 and not cfg.timing


def test_blocks_and_block_io():
    cfg = parse_config(BASE + "[ictm]\ntau = 1.5\noutput = i.pgm\n[drlse]\nmu = 0.1\n"
                              "potential = single_well\ntrace = d.csv\n")
    assert cfg.ictm_params().tau == 1.5 and cfg.blocks["ictm"].output == "i.pgm"
    assert cfg.drlse_params().potential == "single_well" and cfg.drlse_params().mu == 0.1
    assert cfg.blocks["drlse"].trace == "d.csv" and cfg.blocks["drlse"].present


def test_precedence_override_beats_block_beats_flat():
    text = BASE + "tau = 3\n[ictm]\ntau = 4\n"
    assert parse_config(text).ictm_params().tau == 4.0
    assert parse_config(text, [("tau", "5")]).ictm_params().tau == 5.0
    assert parse_config(text, [("ictm.tau", "6")]).ictm_params().tau == 6.0
    assert parse_config(BASE, [("method", "drlse"), ("lambda", "2")]).drlse_params().lam == 2.0


@pytest.mark.parametrize("text", [
    BASE + "bogus = 1\n",
    BASE + "[ictm]\nalpha = 1\n",
    BASE + "[other]\nx = 1\n",
    BASE + "tau = -1\n",
    BASE + "max_iter = many\n",
    BASE + "snapshot_every = -2\n",
    BASE.replace("ictm", "snake"),
    "input = a.pgm\ntau = 2\n",
    BASE + "tau = 1\ntau = 2\n",
    BASE + "alpha = 5\n",
])
def test_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)
