#!/usr/bin/env python3
"""Independent oracle for the nine-round competition record.

The record is transcribed below exactly as printed (beta in m'ss'' form,
the untimed cell as 0). Scores are s / beta * alpha summed over timed cells,
using exact rationals; the untimed cell contributes nothing. Standard
library only.
"""
from fractions import Fraction

RECORD = [
    # (beta task 1, beta task 2, beta task 3), (s1, s2, s3)
    (("1'47''", "0'13''", "1'56''"), (5, 5, 5)),
    (("1'24''", "0'40''", "1'15''"), (5, 5, 5)),
    (("1'03''", "0'56''", "1'32''"), (5, 5, 5)),
    (("2'18''", "0'27''", "0'30''"), (5, 5, 5)),
    (("2'10''", "0'55''", "0'52''"), (5, 5, 5)),
    (("0'58''", "0'22''", "0'59''"), (5, 5, 5)),
    (("1'43''", "0'16''", "1'24''"), (5, 5, 5)),
    (("1'24''", "0'28''", "1'42''"), (5, 5, 5)),
    (("1'24''", "0'10''", "0"), (5, 5, 1)),
]
ALPHA = 1


def seconds(cell):
    if cell == "0":
        return 0
    minutes, rest = cell.split("'", 1)
    return int(minutes) * 60 + int(rest.rstrip("'"))


def main():
    total = Fraction(0)
    durations = []
    complete = []
    timed = 0
    for betas, scores in RECORD:
        secs = [seconds(b) for b in betas]
        for beta, s in zip(secs, scores):
            if beta > 0:
                total += Fraction(s, beta) * ALPHA
                timed += 1
        durations.append(sum(secs))
        if all(b > 0 for b in secs):
            complete.append(sum(secs))
    print(f"timed_subtasks {timed}")
    print(f"total_exact {total}")
    print(f"total {float(total)!r}")
    print(f"mean_round_duration_s {Fraction(sum(durations), len(durations))}")
    print(f"mean_complete_round_duration_s {Fraction(sum(complete), len(complete))}")


if __name__ == "__main__":
    main()
