# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""
This module defines base tools for writing retrievers.

All retrievers must inherit from `BaseRetriever` which takes care of caching
the observations and of reporting failures of the backend in a uniform way.
Episodes only rely on the `search` method so that a network backed retriever
can replace the in-process index without touching the rest of the code.

:Contains:
    BaseRetriever :
        Base class for all retrievers.

"""
import logging
import threading
from collections import OrderedDict
from inspect import cleandoc
from textwrap import fill

from ..errors import LabError, RetrieverError

logger = logging.getLogger(__name__)

#: Default number of observations kept by the cache.
CACHE_SIZE = 4096


class BaseRetriever(object):
    """Base class for all retrievers.

    Parameters
    ----------
    caching_allowed : bool, optional
        Whether observations can be cached. Only retrievers whose answers
        never change for a given query should allow it.

    cache_size : int, optional
        Maximal number of cached observations, the least recently used
        ones are evicted first.

    Methods
    -------
    search(query, k)
        Observation holding the k best snippets for a query.
    clear_cache()
        Forget all the cached observations.

    """
    def __init__(self, caching_allowed=True, cache_size=CACHE_SIZE):
        super(BaseRetriever, self).__init__()
        self.caching_allowed = caching_allowed
        self.cache_size = cache_size
        self._cache = OrderedDict()
        self._lock = threading.Lock()

    def search(self, query, k):
        """Observation holding the k best snippets for a query.

        Failures of the backend are reported as RetrieverError.

        """
        key = (query, k)
        if self.caching_allowed:
            with self._lock:
                if key in self._cache:
                    self._cache.move_to_end(key)
                    return self._cache[key]
        try:
            observation = self._search(query, k)
        except LabError:
            raise
        except Exception as e:
            msg = '{} failed on query {!r}: {}'
            raise RetrieverError(msg.format(type(self).__name__, query,
                                            e)) from e
        if self.caching_allowed:
            with self._lock:
                self._cache[key] = observation
                while len(self._cache) > self.cache_size:
                    self._cache.popitem(last=False)
        return observation

    def clear_cache(self):
        """Forget all the cached observations.

        """
        with self._lock:
            self._cache.clear()

    def _search(self, query, k):
        """Run the actual search.

        """
        message = fill(cleandoc(
            '''This method is used to query the backend and should be
            implemented by classes subclassing BaseRetriever'''),
            80)
        raise NotImplementedError(message)
