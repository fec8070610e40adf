# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Gradient descent rules operating on PolicyParams.

Optimizers keep their state across calls, a training stage uses a single
instance for all its steps.

"""
import numpy as np

from ..errors import ConfigurationError, NumericError


def global_norm(grads):
    return float(np.sqrt(sum(np.sum(g * g) for g in grads.values())))


def clip_gradients(grads, max_norm):
    """Rescale the gradients so that their global norm is at most max_norm.

    A null max_norm disables the clipping.

    """
    if max_norm <= 0:
        return grads
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}


class SGD(object):
    """Plain gradient descent.

    """
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        """Updated copy of the parameters.

        """
        if self.lr == 0:
            return params.copy()
        _check_finite(grads)
        return params.replace(**{name: array - self.lr * grads[name]
                                 for name, array in params.arrays()})


class Adam(object):
    """Adam with bias corrected moments.

    """
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        """Updated copy of the parameters.

        """
        if self.lr == 0:
            return params.copy()
        _check_finite(grads)
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        updated = {}
        for name, array in params.arrays():
            g = grads[name]
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            updated[name] = array - self.lr * (m / c1) / (np.sqrt(v / c2) +
                                                          self.eps)
        return params.replace(**updated)


def _check_finite(grads):
    bad = sorted(name for name, g in grads.items()
                 if not np.all(np.isfinite(g)))
    if bad:
        raise NumericError('Non finite gradient', {'arrays': ','.join(bad)})


def make_optimizer(name, lr):
    """Build an optimizer from its configuration name.

    """
    if name == 'adam':
        return Adam(lr)
    if name == 'sgd':
        return SGD(lr)
    raise ConfigurationError('Unknown optimizer {}'.format(name))
