# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Desk-scale laboratory for jointly optimised retrieve-or-answer pipelines.

A compact parametric policy decides when to query a lexical index, which
rewrite of the question to send and which candidate to answer with. It is
warmed up by behavior cloning and refined with PPO against synthetic worlds.

"""
from .version import __version__
