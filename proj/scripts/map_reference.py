#!/usr/bin/env python3
"""Reference implementation of the mAP curve rule, independent of the C++ code.

Given per-threshold (precision, recall) points for IoU thresholds 0.1..1.0:
sort by recall ascending (precision descending on ties), prepend (0, p_first),
collapse equal recalls to the maximum precision, integrate with the
trapezoidal rule, clamp to [0, 1].

Usage: map_reference.py p1,r1 p2,r2 ... (10 points)
With no arguments, prints the frozen test scenarios.
"""
import sys


def curve_area(points):
    pts = sorted(((r, p) for p, r in points), key=lambda x: (x[0], -x[1]))
    pts.insert(0, (0.0, pts[0][1]))
    curve = []
    for r, p in pts:
        if curve and curve[-1][0] == r:
            curve[-1] = (r, max(curve[-1][1], p))
        else:
            curve.append((r, p))
    area = sum((curve[i][0] - curve[i - 1][0]) * (curve[i][1] + curve[i - 1][1]) / 2
               for i in range(1, len(curve)))
    return min(max(area, 0.0), 1.0)


def pr_at(iou_value, threshold):
    tp = 1 if iou_value >= threshold else 0
    return (tp / 1.0, tp / 1.0)  # one prediction, one ground truth


def main(argv):
    if len(argv) > 1:
        points = [tuple(map(float, a.split(","))) for a in argv[1:]]
        print(f"{curve_area(points):.10f}")
        return
    thresholds = [k / 10 for k in range(1, 11)]
    single_055 = [pr_at(0.55, t) for t in thresholds]
    print("single pair iou=0.55 ->", curve_area(single_055))
    perfect = [(1.0, 1.0)] * 10
    print("perfect predictions  ->", curve_area(perfect))
    nothing = [(0.0, 0.0)] * 10
    print("no predictions       ->", curve_area(nothing))


if __name__ == "__main__":
    main(sys.argv)
