# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Query rewrite templates.

The rewrite head picks one of these deterministic transformations of the
question text. Template ids are stable: 0 Identity, 1 KeywordsOnly,
2 TypeHint, 3 QuoteFocus.

"""
import string

from atom.api import Enum, Int

from ..env.records import Record

#: Words removed by the keyword based templates.
STOPWORDS = frozenset("""
a an the of in on at to for from by with and or as is are was were be been
being do does did has have had who whom whose what which when where why how
that this these those it its into about than then there their they he she
his her
""".split())

#: Type token appended by TypeHint for each wh-word.
TYPE_HINTS = {'who': 'person', 'when': 'date', 'where': 'place'}

IDENTITY = 'Identity'

KEYWORDS_ONLY = 'KeywordsOnly'

TYPE_HINT = 'TypeHint'

QUOTE_FOCUS = 'QuoteFocus'

TEMPLATE_KINDS = (IDENTITY, KEYWORDS_ONLY, TYPE_HINT, QUOTE_FOCUS)


def surface_tokens(text):
    """Whitespace tokens stripped of surrounding punctuation, case kept.

    """
    tokens = (t.strip(string.punctuation) for t in text.split())
    return [t for t in tokens if t]


def keywords(text):
    """Tokens of a text which are not stopwords, in order.

    """
    return [t for t in surface_tokens(text) if t.lower() not in STOPWORDS]


def wh_word(text):
    """Lower cased first token of a question if it is a wh-word.

    """
    tokens = surface_tokens(text)
    if tokens and tokens[0].lower() in STOPWORDS:
        first = tokens[0].lower()
        if first.startswith('wh') or first == 'how':
            return first
    return ''


def _capitalized_run(text):
    best, current = [], []
    for token in surface_tokens(text):
        if token[0].isupper() and token.lower() not in STOPWORDS:
            current.append(token)
            if len(current) > len(best):
                best = list(current)
        else:
            current = []
    return best


class RewriteTemplate(Record):
    """A deterministic question to query transformation.

    """
    id = Int()

    kind = Enum(*TEMPLATE_KINDS)

    def apply(self, question_text):
        return apply_template(self, question_text)


def make_templates(n_templates):
    """The first n templates in id order.

    """
    return tuple(RewriteTemplate(id=i, kind=TEMPLATE_KINDS[i])
                 for i in range(n_templates))


def apply_template(template, question_text):
    """Transform a question into a search query.

    Transformations yielding no token fall back on the question itself so
    that a query is never empty.

    """
    kind = template.kind
    if kind == IDENTITY:
        return question_text
    if kind == KEYWORDS_ONLY:
        tokens = keywords(question_text)
    elif kind == TYPE_HINT:
        tokens = keywords(question_text)
        hint = TYPE_HINTS.get(wh_word(question_text))
        if hint:
            tokens.append(hint)
    else:
        tokens = _capitalized_run(question_text) or keywords(question_text)
    return ' '.join(tokens) or question_text
