import numpy as np
import pytest

from dscopula import ChainConfig, PriorSpec, available_kernels, run_chain, select_kernel
from dscopula import sampler as sampler_mod
from dscopula.sampler import KERNEL_ENV_VAR

HAS_COMPILED = "compiled" in available_kernels()

needs_compiled = pytest.mark.skipif(not HAS_COMPILED, reason="compiled kernel not built")


def _result_fields(res):
    return (
        res.mean_P.entries,
        res.acceptance_rate,
        res.radius_trace,
        res.log_posterior_trace,
        res.acceptance_trace,
        res.states,
    )


def assert_bit_identical(a, b):
    for x, y in zip(_result_fields(a), _result_fields(b)):
        if x is None:
            assert y is None
        else:
            assert np.array_equal(x, y)


@needs_compiled
@pytest.mark.parametrize("m", [2, 3, 4, 6])
@pytest.mark.parametrize("prior_kind", ["uniform", "jeffreys"])
def test_twins_match_posterior_indicator(m, prior_kind, rng):
    data = rng.random((30, 2))
    cfg = ChainConfig(
        m=m, prior=PriorSpec(prior_kind, m), T=300, burn_in=50, thin=7, seed=2024
    )
    assert_bit_identical(run_chain(data, cfg, kernel="compiled"), run_chain(data, cfg, kernel="python"))


@needs_compiled
@pytest.mark.parametrize("m", [3, 5])
def test_twins_match_prior_only(m):
    cfg = ChainConfig(
        m=m, prior=PriorSpec("jeffreys", m), T=500, burn_in=100, thin=3,
        seed=7, mode="prior_only",
    )
    assert_bit_identical(run_chain(None, cfg, kernel="compiled"), run_chain(None, cfg, kernel="python"))


@needs_compiled
@pytest.mark.parametrize("m", [2, 4])
def test_twins_match_bernstein(m, rng):
    data = rng.random((25, 2))
    cfg = ChainConfig(
        m=m, prior=PriorSpec("jeffreys", m), T=200, burn_in=40, thin=5,
        seed=99, basis="bernstein",
    )
    assert_bit_identical(run_chain(data, cfg, kernel="compiled"), run_chain(data, cfg, kernel="python"))


@needs_compiled
def test_twins_match_hastings(rng):
    data = rng.random((20, 2))
    cfg = ChainConfig(
        m=4, prior=PriorSpec("jeffreys", 4), T=250, burn_in=50, thin=4,
        seed=5150, hastings_correction=True,
    )
    assert_bit_identical(run_chain(data, cfg, kernel="compiled"), run_chain(data, cfg, kernel="python"))


@needs_compiled
def test_kernel_names():
    assert select_kernel("compiled").KERNEL_NAME == "compiled"
    assert select_kernel("python").KERNEL_NAME == "python"
    cfg = ChainConfig(m=2, prior=PriorSpec("uniform", 2), T=5, burn_in=0, mode="prior_only")
    assert run_chain(None, cfg, kernel="compiled").kernel == "compiled"
    assert run_chain(None, cfg, kernel="python").kernel == "python"


def test_available_kernels_lists_python():
    names = available_kernels()
    assert "python" in names
    if HAS_COMPILED:
        assert names[0] == "compiled"


def test_select_kernel_auto_prefers_compiled(monkeypatch):
    monkeypatch.delenv(KERNEL_ENV_VAR, raising=False)
    mod = select_kernel()
    if HAS_COMPILED:
        assert mod.KERNEL_NAME == "compiled"
    else:
        assert mod.KERNEL_NAME == "python"
    assert select_kernel("auto") is mod


def test_env_var_overrides_auto(monkeypatch):
    monkeypatch.setenv(KERNEL_ENV_VAR, "python")
    assert select_kernel().KERNEL_NAME == "python"
    monkeypatch.setenv(KERNEL_ENV_VAR, "bogus")
    with pytest.raises(ValueError):
        select_kernel()


def test_explicit_name_beats_env_var(monkeypatch):
    monkeypatch.setenv(KERNEL_ENV_VAR, "compiled")
    assert select_kernel("python").KERNEL_NAME == "python"


def test_compiled_request_fails_without_build(monkeypatch):
    monkeypatch.delenv(KERNEL_ENV_VAR, raising=False)
    monkeypatch.setattr(sampler_mod, "_kernel_c", None)
    with pytest.raises(RuntimeError):
        select_kernel("compiled")
    assert select_kernel() is sampler_mod._kernel_py


def test_unknown_kernel_name():
    with pytest.raises(ValueError):
        select_kernel("fortran")
