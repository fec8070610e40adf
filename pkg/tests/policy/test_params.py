# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Test the policy parameters and their checkpoints.

"""
import numpy as np
import pytest

from smartrag_lab.config import PolicyConfig
from smartrag_lab.errors import ConfigurationError
from smartrag_lab.policy.candidates import N_CANDIDATE_FEATURES
from smartrag_lab.policy.params import (init_params, load_checkpoint,
                                        save_checkpoint)


class TestParams(object):

    def test_linear_shapes(self):
        params = init_params(PolicyConfig(dim=16, n_templates=3))
        assert params.names == ('W_dec', 'W_rew', 'w_ans', 'w_val')
        assert params.shapes() == {'W_dec': (2, 16), 'W_rew': (3, 16),
                                   'w_ans': (N_CANDIDATE_FEATURES + 16,),
                                   'w_val': (16,)}
        assert not params.to_vector().any()

    def test_hidden_layer(self):
        cfg = PolicyConfig(dim=16, hidden_units=5)
        with pytest.raises(ConfigurationError):
            init_params(cfg)
        params = init_params(cfg, np.random.default_rng(0))
        assert params.W_hid.shape == (5, 16)
        assert params.W_dec.shape == (2, 5)
        assert params.W_hid.any()

    def test_vector_round_trip(self):
        params = init_params(PolicyConfig(dim=8, hidden_units=3),
                             np.random.default_rng(1))
        vector = np.arange(params.to_vector().size, dtype=float)
        np.testing.assert_array_equal(params.from_vector(vector).to_vector(),
                                      vector)

    def test_replace_copies(self):
        params = init_params(PolicyConfig(dim=8))
        other = params.copy()
        other.w_val[0] = 1.0
        assert params.w_val[0] == 0.0

    def test_compatibility(self):
        params = init_params(PolicyConfig(dim=8))
        params.check_compatible(init_params(PolicyConfig(dim=8)))
        with pytest.raises(ConfigurationError):
            params.check_compatible(init_params(PolicyConfig(dim=16)))


class TestCheckpoints(object):

    def setup_method(self):
        self.cfg = PolicyConfig(dim=16, hidden_units=4)
        self.params = init_params(self.cfg, np.random.default_rng(3))

    def test_round_trip(self, tmpdir):
        path = str(tmpdir.join('params.h5'))
        save_checkpoint(path, self.params, {'seed': 3})
        loaded, echo = load_checkpoint(path, self.cfg)
        assert echo == {'seed': 3}
        assert loaded.names == self.params.names
        for name, array in self.params.arrays():
            np.testing.assert_array_equal(getattr(loaded, name), array)

    def test_mismatching_configuration(self, tmpdir):
        path = str(tmpdir.join('params.h5'))
        save_checkpoint(path, self.params)
        with pytest.raises(ConfigurationError) as excinfo:
            load_checkpoint(path, PolicyConfig(dim=32, hidden_units=4))
        assert excinfo.value.field == 'policy.dim'

    def test_missing_file(self, tmpdir):
        with pytest.raises(ConfigurationError):
            load_checkpoint(str(tmpdir.join('missing.h5')))
