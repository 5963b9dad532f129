"""Symbolic reduction of Stokes-operator words.

A word is a tuple over {1, 2, 3} standing for an ordered operator product.
Swapping an adjacent out-of-order pair costs a commutator term: a word of
length r rewrites as the sorted word of the same multiset plus words of
length r-1, recursively.  Expectation values of any word come straight from
the polarization tensor of its length, so these reductions let moment
components, tensor assembly and the order-coupling constraints be expressed
entirely in terms of lower-order tensors.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

Word = tuple[int, ...]

# S_a S_b = S_b S_a + 2i eps(a, b, c) S_c for the unique c not in {a, b}
_THIRD = {(1, 2): 3, (2, 1): 3, (1, 3): 2, (3, 1): 2, (2, 3): 1, (3, 2): 1}
_EPS = {(1, 2): 1, (2, 3): 1, (3, 1): 1, (2, 1): -1, (3, 2): -1, (1, 3): -1}


def standard_word(ones: int, twos: int, order: int) -> Word:
    """The sorted word with the given index multiplicities."""
    threes = order - ones - twos
    if threes < 0 or ones < 0 or twos < 0:
        raise ValueError("multiplicities must be non-negative and sum to at most the order")
    return (1,) * ones + (2,) * twos + (3,) * threes


def class_words(ones: int, twos: int, order: int) -> tuple[Word, ...]:
    """All distinct words sharing a multiset, in lexicographic order."""
    base = standard_word(ones, twos, order)
    return tuple(sorted(set(itertools.permutations(base))))


def trinomial(ones: int, twos: int, order: int) -> int:
    threes = order - ones - twos
    return math.factorial(order) // (
        math.factorial(ones) * math.factorial(twos) * math.factorial(threes)
    )


@lru_cache(maxsize=None)
def reduce_to_standard(word: Word) -> tuple[tuple[Word, complex], ...]:
    """Rewrite a word as its sorted form plus strictly shorter words.

    Returns (word', coefficient) pairs; exactly one entry has the original
    length (the sorted multiset, coefficient 1) and the rest are shorter,
    left unsorted since tensors value any word directly.
    """
    for i in range(len(word) - 1):
        a, b = word[i], word[i + 1]
        if a > b:
            swapped = word[:i] + (b, a) + word[i + 2 :]
            shorter = word[:i] + (_THIRD[(a, b)],) + word[i + 2 :]
            terms: dict[Word, complex] = dict(reduce_to_standard(swapped))
            terms[shorter] = terms.get(shorter, 0.0) + 2j * _EPS[(a, b)]
            return tuple(sorted(terms.items()))
    return ((word, 1.0 + 0j),)


def lower_order_terms(word: Word) -> tuple[tuple[Word, complex], ...]:
    """The shorter-word part of reduce_to_standard (the sorted term removed)."""
    return tuple((w, c) for w, c in reduce_to_standard(word) if len(w) < len(word))


def evaluate_word(word: Word, tensors) -> complex:
    """Expectation of a word from the tensor of its length.

    tensors maps order -> complex ndarray of shape (3,)*order; order 0 is
    implicitly 1 (the state trace).
    """
    if len(word) == 0:
        return 1.0 + 0j
    tensor = tensors[len(word)]
    return complex(tensor[tuple(j - 1 for j in word)])


def evaluate_terms(terms, tensors) -> complex:
    return sum(c * evaluate_word(w, tensors) for w, c in terms)


def evaluate_terms_with_magnitude(terms, tensors) -> tuple[complex, float]:
    """Sum of terms plus the cancellation-free magnitude of the summands."""
    value = 0.0 + 0j
    magnitude = 0.0
    for w, c in terms:
        contribution = c * evaluate_word(w, tensors)
        value += contribution
        magnitude += abs(contribution)
    return value, magnitude


def word_matrix(word: Word, generators) -> np.ndarray:
    """Dense matrix of a word given the three generator matrices."""
    dim = generators[0].shape[0]
    out = np.eye(dim, dtype=complex)
    for j in word:
        out = out @ generators[j - 1]
    return out


@lru_cache(maxsize=None)
def commutator_with_square_terms(ones: int, twos: int, order: int) -> tuple[tuple[Word, complex], ...]:
    """S_1^k [S_1^2, S_2^l] S_3^(r-k-l-2) as a combination of shorter words.

    Both expansions share the same sorted leading word, so the difference
    survives only in commutator corrections of lower order.
    """
    threes = order - ones - twos - 2
    if threes < 0:
        raise ValueError("order too small for the requested multiplicities")
    left = (1,) * ones + (1, 1) + (2,) * twos + (3,) * threes
    right = (1,) * ones + (2,) * twos + (1, 1) + (3,) * threes
    terms: dict[Word, complex] = {}
    for w, c in reduce_to_standard(left):
        terms[w] = terms.get(w, 0.0) + c
    for w, c in reduce_to_standard(right):
        terms[w] = terms.get(w, 0.0) - c
    return tuple((w, c) for w, c in sorted(terms.items()) if abs(c) > 0.0)
