"""Regenerates the trial-log fixtures.

Counts follow the published confusion tables at 24 trials per row. The
white-noise errors are spread over participants so the per-melody one-way
ANOVA comes out at F(3, 28) = 0.9839.
"""
import random

HEADER = "participant,condition,trial_index,presented,answered"
ERRORS = {
    "none": {"P3": [("A", "B")], "P6": [("C", "B")]},
    "white": {
        "P2": [("A", "C")],
        "P4": [("B", "C")],
        "P7": [("B", "C")],
        "P5": [("C", "A"), ("C", "B"), ("C", "B")],
        "P8": [("C", "B")],
    },
}


def session(rng, participant, condition):
    plan = list("ABCD" * 3)
    rng.shuffle(plan)
    wrong = list(ERRORS[condition].get(participant, []))
    rows = []
    for i, presented in enumerate(plan):
        answered = presented
        for k, (p, a) in enumerate(wrong):
            if p == presented:
                answered = a
                del wrong[k]
                break
        rows.append(f"{participant},{condition},{i},{presented},{answered}")
    assert not wrong
    return rows


def write(name, rows):
    with open(name, "w") as f:
        f.write("\n".join([HEADER] + rows) + "\n")


rng = random.Random(2023)
people = [f"P{i}" for i in range(1, 9)]
none = [r for p in people for r in session(rng, p, "none")]
white = [r for p in people for r in session(rng, p, "white")]
write("table1_none.csv", none)
write("table2_white.csv", white)
write("combined.csv", none + white)
write("single_participant.csv", [r for r in none if r.startswith("P1,")])
write("header_only.csv", [])
bad = none[:5]
bad[2] = bad[2].rsplit(",", 1)[0] + ",E"
write("malformed.csv", bad)
