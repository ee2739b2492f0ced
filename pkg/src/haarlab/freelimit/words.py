"""Traces of words in a free family of Haar unitaries.

The trace of a word in free Haar unitaries is 1 when the word reduces to
the empty word in the free group (adjacent ``x x*`` or ``x* x`` pairs
cancel) and 0 otherwise.
"""

from __future__ import annotations

from ..ncalg import StarMonomial


def free_haar_trace(word: StarMonomial) -> float:
    """Trace of the word evaluated in a tuple of free Haar unitaries."""
    stack = []
    for letter in word.letters:
        if stack and stack[-1].index == letter.index and stack[-1].starred != letter.starred:
            stack.pop()
        else:
            stack.append(letter)
    return 1.0 if not stack else 0.0
