# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Exceptions raised by the laboratory.

:Contains:
    LabError :
        Root of the hierarchy, every error raised on purpose derives from it.
    ConfigurationError :
        Invalid or missing configuration, mismatching checkpoints.
    NumericError :
        Non-finite quantities met during optimisation.

The command line maps `ConfigurationError` to the exit code 2 and any other
`LabError` to the exit code 3.

"""


class LabError(Exception):
    """Generic error raised when the laboratory does not behave as expected.

    """
    #: Short machine readable name used in the command line error records.
    kind = 'runtime'


class ContractError(LabError):
    """Raised when the precondition of an operation is violated.

    """
    kind = 'contract'


class InvariantError(LabError):
    """Raised when an internal invariant is found broken.

    """
    kind = 'invariant'


class QuotaViolation(LabError):
    """Raised when an action kind is applied while not being allowed.

    """
    kind = 'quota'


class RetrieverError(LabError):
    """Raised when a retriever fails to answer a query.

    """
    kind = 'retriever'


class CorpusError(LabError):
    """Raised on inconsistent corpora (duplicate or unknown ids).

    """
    kind = 'corpus'


class ConfigurationError(LabError):
    """Raised on invalid or incomplete configuration.

    Parameters
    ----------
    message : str
        Description of the problem.

    field : str, optional
        Dotted path of the offending configuration member.

    """
    kind = 'config'

    def __init__(self, message, field=None):
        super(ConfigurationError, self).__init__(message)
        self.field = field


class GenerationError(LabError):
    """Raised when a world specification cannot be realised.

    """
    kind = 'generation'


class IngestError(LabError):
    """Raised when an external file cannot be ingested.

    Parameters
    ----------
    message : str
        Description of the problem.

    path : str, optional
        File in which the problem occured.

    line : int, optional
        One based index of the faulty line.

    """
    kind = 'ingest'

    def __init__(self, message, path=None, line=None):
        if line is not None:
            message = '{}:{}: {}'.format(path, line, message)
        super(IngestError, self).__init__(message)
        self.path = path
        self.line = line


class NumericError(LabError):
    """Raised when a loss or a gradient stops being finite.

    Parameters
    ----------
    message : str
        Description of the problem.

    diagnostics : dict, optional
        Quantities useful to understand the failure.

    """
    kind = 'numeric'

    def __init__(self, message, diagnostics=None):
        diagnostics = diagnostics or {}
        if diagnostics:
            details = ', '.join('{}={}'.format(k, diagnostics[k])
                                for k in sorted(diagnostics))
            message = '{} ({})'.format(message, details)
        super(NumericError, self).__init__(message)
        self.diagnostics = diagnostics


class EnumerationError(LabError):
    """Raised when a brute force enumeration exceeds its guard.

    """
    kind = 'enumeration'
