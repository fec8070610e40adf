# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Weights of the policy heads and their HDF5 checkpoints.

"""
import json
import logging
import warnings

import numpy as np
from atom.api import Atom, Int, Typed

from ..errors import ConfigurationError
from .candidates import N_CANDIDATE_FEATURES

#: Protection against numpy deprecation message in h5py
warnings.filterwarnings("ignore", category=FutureWarning, module="h5py")

import h5py  # noqa

logger = logging.getLogger(__name__)

#: Weight arrays in declared (checkpoint) order.
PARAM_NAMES = ('W_hid', 'b_hid', 'W_dec', 'W_rew', 'w_ans', 'w_val')

#: Arrays only present when a hidden layer is used.
HIDDEN_NAMES = ('W_hid', 'b_hid')


class PolicyParams(Atom):
    """Weights of the decision, rewrite, answer and value heads.

    The decision (2 x E), rewrite (R x E) and value (E) heads act on the
    embedding of the state, which is the state features themselves (E = D)
    or the output of a tanh hidden layer (E = hidden units). The answer
    weights act on candidate features and never go through the hidden
    layer, so answer heads can be swapped between checkpoints.

    """
    #: Dimension D of the state features.
    dim = Int()

    #: Number R of rewrite templates.
    n_templates = Int()

    #: Width of the hidden layer (0 for linear heads).
    hidden_units = Int()

    W_hid = Typed(np.ndarray)

    b_hid = Typed(np.ndarray)

    W_dec = Typed(np.ndarray)

    W_rew = Typed(np.ndarray)

    w_ans = Typed(np.ndarray)

    w_val = Typed(np.ndarray)

    @property
    def embed_dim(self):
        return self.hidden_units or self.dim

    @property
    def names(self):
        """Names of the arrays actually in use, in declared order.

        """
        if self.hidden_units:
            return PARAM_NAMES
        return tuple(n for n in PARAM_NAMES if n not in HIDDEN_NAMES)

    def arrays(self):
        return [(name, getattr(self, name)) for name in self.names]

    def shapes(self):
        e = self.embed_dim
        shapes = {'W_hid': (self.hidden_units, self.dim),
                  'b_hid': (self.hidden_units,),
                  'W_dec': (2, e), 'W_rew': (self.n_templates, e),
                  'w_ans': (N_CANDIDATE_FEATURES + self.dim,),
                  'w_val': (e,)}
        return {n: shapes[n] for n in self.names}

    def replace(self, **arrays):
        """Copy of the parameters in which some arrays are replaced.

        """
        kwargs = {'dim': self.dim, 'n_templates': self.n_templates,
                  'hidden_units': self.hidden_units}
        for name in self.names:
            kwargs[name] = np.array(arrays.get(name, getattr(self, name)),
                                    dtype=float)
        return type(self)(**kwargs)

    def copy(self):
        return self.replace()

    def zeros_like(self):
        """Parameters of the same shape filled with zeros.

        """
        return self.replace(**{n: np.zeros_like(a) for n, a in self.arrays()})

    def all_finite(self):
        return all(np.all(np.isfinite(a)) for _, a in self.arrays())

    def check_compatible(self, other):
        """Raise if two parameter sets cannot exchange heads.

        """
        if self.shapes() != other.shapes():
            msg = 'Incompatible parameters: {} vs {}'
            raise ConfigurationError(msg.format(self.shapes(),
                                                other.shapes()))

    def to_vector(self):
        """All the weights flattened in declared order.

        """
        return np.concatenate([a.ravel() for _, a in self.arrays()])

    def from_vector(self, vector):
        """Parameters of the same shape built from a flat vector.

        """
        arrays, start = {}, 0
        for name, array in self.arrays():
            stop = start + array.size
            arrays[name] = np.asarray(vector[start:stop]).reshape(array.shape)
            start = stop
        return self.replace(**arrays)


def init_params(cfg, rng=None):
    """Initial parameters of a policy.

    Heads start at zero so that every distribution is uniform. The hidden
    layer, when present, is drawn from a normal distribution of standard
    deviation init_scale / sqrt(D).

    Parameters
    ----------
    cfg : PolicyConfig
        Shape of the policy.

    rng : numpy.random.Generator, optional
        Required when a hidden layer is used.

    """
    d, r, h = cfg.dim, cfg.n_templates, cfg.hidden_units
    e = h or d
    arrays = {'dim': d, 'n_templates': r, 'hidden_units': h,
              'W_dec': np.zeros((2, e)), 'W_rew': np.zeros((r, e)),
              'w_ans': np.zeros(N_CANDIDATE_FEATURES + d),
              'w_val': np.zeros(e)}
    if h:
        if rng is None:
            raise ConfigurationError('A random generator is required to '
                                     'initialise the hidden layer.')
        scale = cfg.init_scale / np.sqrt(d)
        arrays['W_hid'] = rng.normal(0.0, scale, size=(h, d))
        arrays['b_hid'] = np.zeros(h)
    return PolicyParams(**arrays)


def save_checkpoint(path, params, config_echo=None):
    """Write the parameters in an HDF5 file.

    Weights are stored as float64 datasets in declared order, dimensions and
    the configuration echo as attributes. Timestamps are not recorded so
    that identical parameters give identical files.

    """
    with h5py.File(path, 'w', libver='earliest') as f:
        f.attrs['dim'] = params.dim
        f.attrs['n_templates'] = params.n_templates
        f.attrs['hidden_units'] = params.hidden_units
        f.attrs['ordered_keys'] = json.dumps(list(params.names))
        f.attrs['config'] = json.dumps(config_echo or {}, sort_keys=True)
        for name, array in params.arrays():
            f.create_dataset(name, data=np.asarray(array, dtype='<f8'),
                             track_times=False)
    logger.debug('Saved checkpoint %s', path)


def load_checkpoint(path, expected=None):
    """Read parameters written by `save_checkpoint`.

    Parameters
    ----------
    path : str
        Checkpoint file.

    expected : PolicyConfig, optional
        Configuration the checkpoint must match.

    Returns
    -------
    params : PolicyParams

    config : dict
        Configuration echo stored with the weights.

    """
    try:
        with h5py.File(path, 'r') as f:
            dims = {k: int(f.attrs[k])
                    for k in ('dim', 'n_templates', 'hidden_units')}
            names = json.loads(f.attrs['ordered_keys'])
            arrays = {name: np.array(f[name], dtype=float) for name in names}
            config = json.loads(f.attrs['config'])
    except (OSError, KeyError) as e:
        msg = 'Cannot read checkpoint {}: {}'
        raise ConfigurationError(msg.format(path, e)) from e

    if expected is not None:
        for key in ('dim', 'n_templates', 'hidden_units'):
            if dims[key] != getattr(expected, key):
                msg = 'Checkpoint {} has {}={} but the configuration asks {}'
                raise ConfigurationError(
                    msg.format(path, key, dims[key], getattr(expected, key)),
                    'policy.' + key)
    dims.update(arrays)
    params = PolicyParams(**dims)
    for name, shape in params.shapes().items():
        if getattr(params, name) is None or \
                getattr(params, name).shape != shape:
            msg = 'Checkpoint {} has a malformed {} array'
            raise ConfigurationError(msg.format(path, name))
    return params, config
