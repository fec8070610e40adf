# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the optimizers and the gradient clipping.

"""
import numpy as np
import pytest

from smartrag_lab.config import PolicyConfig
from smartrag_lab.errors import ConfigurationError, NumericError
from smartrag_lab.policy.params import init_params
from smartrag_lab.training.optim import (SGD, Adam, clip_gradients,
                                         global_norm, make_optimizer)


def constant_grads(params, value):
    return {name: np.full_like(array, value) for name, array in
            params.arrays()}


class TestClipping(object):

    def test_rescaled(self):
        grads = {'a': np.array([3.0, 4.0])}
        clipped = clip_gradients(grads, 1.0)
        assert global_norm(clipped) == pytest.approx(1.0)
        np.testing.assert_allclose(clipped['a'], [0.6, 0.8])

    def test_untouched(self):
        grads = {'a': np.array([3.0, 4.0])}
        assert clip_gradients(grads, 10.0) is grads
        assert clip_gradients(grads, 0.0) is grads


class TestOptimizers(object):

    def setup_method(self):
        self.params = init_params(PolicyConfig(dim=8))

    @pytest.mark.parametrize('name', ['sgd', 'adam'])
    def test_null_learning_rate(self, name):
        optimizer = make_optimizer(name, 0.0)
        grads = constant_grads(self.params, 1.5)
        updated = optimizer.step(self.params, grads)
        np.testing.assert_array_equal(updated.to_vector(),
                                      self.params.to_vector())

    def test_sgd_step(self):
        updated = SGD(0.5).step(self.params, constant_grads(self.params, 2.0))
        np.testing.assert_allclose(updated.to_vector(), -1.0)
        assert not self.params.to_vector().any()

    def test_adam_first_step(self):
        grads = constant_grads(self.params, 3.0)
        grads['w_val'][:] = -0.5
        updated = Adam(0.1).step(self.params, grads)
        np.testing.assert_allclose(updated.W_dec, -0.1, rtol=1e-6)
        np.testing.assert_allclose(updated.w_val, 0.1, rtol=1e-6)

    @pytest.mark.parametrize('name', ['sgd', 'adam'])
    def test_non_finite_gradient(self, name):
        grads = constant_grads(self.params, 1.0)
        grads['W_rew'][0, 0] = np.nan
        with pytest.raises(NumericError) as excinfo:
            make_optimizer(name, 0.1).step(self.params, grads)
        assert excinfo.value.diagnostics == {'arrays': 'W_rew'}

    def test_unknown_optimizer(self):
        with pytest.raises(ConfigurationError):
            make_optimizer('rmsprop', 0.1)
