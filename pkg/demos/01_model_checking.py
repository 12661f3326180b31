#!/usr/bin/env python3
"""Model checking sentences on finite executions.

An execution is a finite sequence of events (action, process) over a fixed
action alphabet split into System and Environment actions, and a universe of
processes split into System-only, Environment-only and shared ones. Sentences
talk about positions and processes with type atoms, action atoms, equality,
the same-process relation ~, position order < and successor +1(x, y), plus
counting quantifiers E>=m / E==m.
"""

from pvg import (
    Alphabet,
    Execution,
    ProcessUniverse,
    model_check,
    parse_formula,
    quantifier_rank,
    similar,
)


def main() -> None:
    alphabet = Alphabet(sys_actions=("a", "b"), env_actions=("c", "d"))
    universe = ProcessUniverse.of_sizes(3, 2, 3)  # ids 1..3 sys, 4..5 env, 6..8 shared
    events = (
        ("a", 1), ("b", 8), ("d", 7), ("c", 4), ("a", 6), ("c", 6),
        ("a", 7), ("d", 6), ("b", 2), ("d", 7), ("a", 7),
    )
    w = Execution(alphabet, universe, events)
    print(f"execution with {len(events)} events over {universe.sizes()} processes\n")

    sentences = {
        "every non-environment process acts":
            "A x. ((s(x) | se(x)) -> E y. (x ~ y & (a(y) | b(y))))",
        "every d is answered by an a on the same process":
            "A x. (d(x) -> E y. (x ~ y & a(y)))",
        "... answered *later* by an a":
            "A x. (d(x) -> E y. (x ~ y & x < y & a(y)))",
        "exactly two a's iff exactly two d's, per process":
            "A x. ((E==2 y. (x ~ y & a(y))) <-> (E==2 y. (x ~ y & d(y))))",
    }
    for description, text in sentences.items():
        phi = parse_formula(text, alphabet)
        value = model_check(w, phi)
        print(f"  [{'true ' if value else 'false'}]  {description}")
        print(f"           {text}   (quantifier rank {quantifier_rank(phi)})")

    # Order-free sentences (no <, no +1) cannot tell similar executions
    # apart; ordered ones can. On one shared process, "d then a" and
    # "a then d" are similar, yet only the first answers its d later.
    tiny = ProcessUniverse.of_sizes(0, 0, 1)
    d_then_a = Execution(alphabet, tiny, (("d", 1), ("a", 1)))
    a_then_d = Execution(alphabet, tiny, (("a", 1), ("d", 1)))
    print(f"\n(d,1)(a,1) and (a,1)(d,1) are similar: {similar(d_then_a, a_then_d)}")
    for description in ("every d is answered by an a on the same process",
                        "... answered *later* by an a"):
        phi = parse_formula(sentences[description], alphabet)
        print(f"  d-then-a {str(model_check(d_then_a, phi)):5}  a-then-d "
              f"{str(model_check(a_then_d, phi)):5}  - {description}")


if __name__ == "__main__":
    main()
