# -*- coding: utf-8 -*-
# -----------------------------------------------------------------------------
# Copyright 2024 by SmartRAG Lab Authors, see AUTHORS for more details.
#
# Distributed under the terms of the BSD license.
#
# The full license is in the file LICENCE, distributed with this software.
# -----------------------------------------------------------------------------
"""Value records exchanged during an episode.

All the records are frozen once built: an operation never modifies a state
in place but returns a new one.

"""
from atom.api import Atom, Bool, Enum, Float, Int, Str, Tuple, Typed, Value

from ..errors import ContractError

#: Kind of the action ending an episode.
ANSWER = 'Answer'

#: Kind of the action querying the retriever.
QUERY = 'Query'

#: Kinds in the order used by the decision head.
KINDS = (ANSWER, QUERY)

#: Separator inserted between snippet texts in an observation.
SNIPPET_SEPARATOR = ' | '


class Record(Atom):
    """Atom frozen at the end of its initialisation.

    """
    def __init__(self, **kwargs):
        super(Record, self).__init__(**kwargs)
        self.freeze()


class Question(Record):
    """A question and its gold answers.

    """
    #: Identifier unique within a dataset.
    id = Str()

    #: Question text.
    text = Str()

    #: Accepted answers (never read by the policy).
    gold_answers = Tuple(Str())

    def __init__(self, **kwargs):
        if not kwargs.get('text'):
            raise ContractError('Question {} has an empty text.'
                                .format(kwargs.get('id')))
        if not kwargs.get('gold_answers'):
            raise ContractError('Question {} has no gold answer.'
                                .format(kwargs.get('id')))
        kwargs['gold_answers'] = tuple(kwargs['gold_answers'])
        super(Question, self).__init__(**kwargs)


class Snippet(Record):
    """One ranked document returned by a retriever.

    """
    doc_id = Str()

    score = Float()

    text = Str()

    #: Salient answer phrase stated by the document, if known.
    answer_span = Typed(str)


class Observation(Record):
    """Result of a query: ranked snippets and their concatenation.

    """
    #: Query which produced the observation.
    query = Str()

    #: Snippets by decreasing score, ties by increasing document id.
    snippets = Tuple(Typed(Snippet))

    #: Snippet texts joined in rank order.
    concatenated_text = Str()

    @classmethod
    def from_snippets(cls, query, snippets):
        """Build an observation and its concatenated text.

        """
        snippets = tuple(snippets)
        text = SNIPPET_SEPARATOR.join(s.text for s in snippets)
        return cls(query=query, snippets=snippets, concatenated_text=text)

    @property
    def max_score(self):
        return max((s.score for s in self.snippets), default=0.0)


class State(Record):
    """Question plus the observations accumulated so far.

    """
    question = Typed(Question)

    observations = Tuple(Typed(Observation))

    #: Number of queries already issued (equal to the observation count).
    retrieve_count = Int()

    def with_observation(self, observation):
        """New state with one more observation.

        """
        return State(question=self.question,
                     observations=self.observations + (observation,),
                     retrieve_count=self.retrieve_count + 1)


class Action(Record):
    """Answer or Query, mirroring the special first token of the policy.

    """
    kind = Enum(ANSWER, QUERY)

    #: Final answer or search query.
    text = Str()

    #: Rewrite template used to build a query (-1 when not applicable).
    template = Int(-1)

    def __init__(self, **kwargs):
        if kwargs.get('kind') == QUERY and not kwargs.get('text'):
            raise ContractError('A query action needs a non empty text.')
        super(Action, self).__init__(**kwargs)

    @classmethod
    def answer(cls, text):
        return cls(kind=ANSWER, text=text)

    @classmethod
    def query(cls, text, template=-1):
        return cls(kind=QUERY, text=text, template=template)


class Continue(Record):
    """Outcome of a query: the episode goes on.

    """
    terminal = False

    next_state = Typed(State)

    observation = Typed(Observation)


class Done(Record):
    """Outcome of an answer: the episode is over.

    """
    terminal = True

    final_answer = Str()


class Step(Record):
    """One decision of an episode.

    """
    #: Short digest of the features the policy saw.
    state_digest = Str()

    action = Typed(Action)

    #: Log probability of the composite action at sampling time.
    log_prob = Float()

    #: Value estimate at sampling time.
    value = Float()

    reward = Float()

    #: Observation produced by a query step.
    observation = Typed(Observation)

    #: Policy inputs kept in memory for training (never serialised).
    inputs = Value()


class Trajectory(Record):
    """A complete episode.

    """
    question_id = Str()

    steps = Tuple(Typed(Step))

    final_answer = Str()

    terminal = Bool()

    @property
    def rewards(self):
        return [s.reward for s in self.steps]

    @property
    def n_queries(self):
        return sum(1 for s in self.steps if s.action.kind == QUERY)

    @property
    def observations(self):
        return [s.observation for s in self.steps if s.observation is not None]

    def to_record(self, gamma):
        """Plain dict written in the trajectory log.

        """
        from ..metrics import discounted_return
        return {'question_id': self.question_id,
                'steps': [{'kind': s.action.kind, 'text': s.action.text,
                           'logprob': s.log_prob, 'value': s.value,
                           'reward': s.reward} for s in self.steps],
                'final_answer': self.final_answer,
                'return': discounted_return(self.rewards, gamma)}
