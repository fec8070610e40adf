# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Episode state machine of the retrieve-or-answer pipeline.

"""
