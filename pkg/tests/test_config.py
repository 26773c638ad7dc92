import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spherecomp.config import ConfigError, ScenarioConfig, load, loads, set_param

from conftest import ROOT

models = st.one_of(
    st.builds(lambda b: {"kind": "warped-bump", "beta": b}, st.floats(-0.3, 0.3)),
    st.just({"kind": "warped-round"}),
    st.builds(lambda k: {"kind": "synthetic-constant", "kappa": k}, st.floats(0.5, 2.0)),
    st.builds(lambda k, e: {"kind": "synthetic-anisotropic", "kappa": k, "eta": e},
              st.floats(0.5, 2.0), st.floats(0, 0.2)),
    st.builds(lambda a: {"kind": "charted-perturbed", "amplitude": a}, st.floats(0, 1e-2)),
)


@st.composite
def scenarios(draw):
    n = draw(st.integers(2, 4))
    m1, m2 = dict(draw(models), n=n), dict(draw(models), n=n)
    data = {"model1": m1, "model2": m2,
            "isometry": draw(st.one_of(st.just({"kind": "identity"}),
                                       st.builds(lambda s: {"kind": "random", "seed": s},
                                                 st.integers(0, 2 ** 31)))),
            "sampler": {"count": draw(st.integers(8, 4096)), "seed": draw(st.integers(0, 99)),
                        "refine": draw(st.booleans())},
            "integrator": {"rtol": draw(st.floats(1e-13, 1e-6)), "method": draw(st.sampled_from(["dp54", "rk4"]))},
            "quadrature": {"nodes": draw(st.integers(3, 1025).map(lambda k: k | 1))},
            "mollifier": {"enabled": draw(st.booleans()), "epsilon": draw(st.floats(1e-3, 0.1))},
            "output": {"report": draw(st.text("abc./_", min_size=1, max_size=12))}}
    return data


@settings(max_examples=60, deadline=None)
@given(scenarios())
def test_toml_roundtrip_is_lossless(data):
    cfg = ScenarioConfig.from_dict(data)
    again = loads(cfg.dumps())
    assert again.to_dict() == cfg.to_dict()
    assert again.dumps() == cfg.dumps()


def test_shipped_configs_load():
    import glob
    paths = sorted(glob.glob(f"{ROOT}/configs/*.toml"))
    assert len(paths) >= 5
    for p in paths:
        if "bad_isometry" in p:
            with pytest.raises(ConfigError, match="orthogonal"):
                load(p)
        else:
            load(p)


@pytest.mark.parametrize("text, match", [
    ('[model1]\nkind="warped-round"\n[model2]\nkind="warped-round"\ncolour=1\n', "colour"),
    ('[model1]\nkind="warped-round"\n', "model2"),
    ('[model1]\nkind="warped-round"\n[model2]\nkind="cylinder"\n', "model2"),
    ('[model1]\nkind="warped-round"\n[model2]\nkind="warped-round"\nn=3\n', "dimension"),
    ("[model1\n", "parse"),
])
def test_rejections(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)


def test_missing_parameter_surfaces_on_build():
    cfg = loads('[model1]\nkind="warped-round"\n[model2]\nkind="warped-bump"\n')
    with pytest.raises(ConfigError, match="beta"):
        cfg.geometries()


def test_non_orthogonal_matrix_rejected():
    text = ('[model1]\nkind="warped-round"\n[model2]\nkind="warped-round"\n'
            '[isometry]\nkind="matrix"\nmatrix=[[1.0, 0.0], [0.0, 1.001]]\n')
    with pytest.raises(ConfigError):
        loads(text)


def test_explicit_rotation_accepted():
    c, s = np.cos(0.3), np.sin(0.3)
    cfg = ScenarioConfig.from_dict({"model1": {"kind": "warped-round"}, "model2": {"kind": "warped-round"},
                                    "isometry": {"kind": "matrix", "matrix": [[c, -s], [s, c]]}})
    assert np.allclose(cfg.Q(), [[c, -s], [s, c]])


def test_set_param():
    cfg = loads('[model1]\nkind="warped-round"\n[model2]\nkind="warped-bump"\nbeta=0.1\n')
    assert set_param(cfg, "beta", 0.2).model2.beta == 0.2
    assert set_param(cfg, "sampler.seed", 5).sampler.seed == 5
    assert cfg.model2.beta == 0.1
    with pytest.raises(ConfigError):
        set_param(cfg, "model2.unknown", 1.0)
