#!/usr/bin/env python3
"""Independent forward-kinematics oracle for config/robot.toml.

Composes the default 7-joint chains with plain 4x4 homogeneous matrices
(numpy only) and prints end-effector poses. The geometry below is
transcribed by hand from config/robot.toml; the Rust implementation
parses that file, this script does not.
"""
import math
import sys

import numpy as np

LINK_Z = [0.10, 0.20, 0.10, 0.20, 0.05, 0.10]
AXES = ["z", "y", "z", "y", "z", "y", "z"]
EE_Z = 0.10
EE_PITCH = math.pi / 2


def rot(axis, angle):
    c, s = math.cos(angle), math.sin(angle)
    m = np.eye(4)
    if axis == "z":
        m[:2, :2] = [[c, -s], [s, c]]
    elif axis == "y":
        m[0, 0], m[0, 2], m[2, 0], m[2, 2] = c, s, -s, c
    else:
        m[1, 1], m[1, 2], m[2, 1], m[2, 2] = c, -s, s, c
    return m


def trans(x, y, z):
    m = np.eye(4)
    m[:3, 3] = [x, y, z]
    return m


def fk(mount_y, q):
    t = trans(0.0, mount_y, 0.0)
    for i in range(7):
        if i > 0:
            t = t @ trans(0.0, 0.0, LINK_Z[i - 1])
        t = t @ rot(AXES[i], q[i])
    t = t @ trans(0.0, 0.0, EE_Z) @ rot("y", EE_PITCH)
    return t


def quat_wxyz(r):
    w = math.sqrt(max(0.0, 1.0 + r[0, 0] + r[1, 1] + r[2, 2])) / 2.0
    x = math.copysign(math.sqrt(max(0.0, 1.0 + r[0, 0] - r[1, 1] - r[2, 2])) / 2.0, r[2, 1] - r[1, 2])
    y = math.copysign(math.sqrt(max(0.0, 1.0 - r[0, 0] + r[1, 1] - r[2, 2])) / 2.0, r[0, 2] - r[2, 0])
    z = math.copysign(math.sqrt(max(0.0, 1.0 - r[0, 0] - r[1, 1] + r[2, 2])) / 2.0, r[1, 0] - r[0, 1])
    return [w, x, y, z]


def report(label, mount_y, q):
    t = fk(mount_y, q)
    p = [float(v) for v in t[:3, 3]]
    print(f"{label}_position_m = [{p[0]!r}, {p[1]!r}, {p[2]!r}]")
    qq = quat_wxyz(t[:3, :3])
    print(f"{label}_quat_wxyz = [{qq[0]!r}, {qq[1]!r}, {qq[2]!r}, {qq[3]!r}]")


if __name__ == "__main__":
    zero = [0.0] * 7
    report("home_left", 0.20, zero)
    report("home_right", -0.20, zero)
    if len(sys.argv) > 1 and sys.argv[1] == "--ready":
        ready = [0.0, 0.5, 0.0, 1.2, 0.0, 0.6, 0.0]
        report("ready_left", 0.20, ready)
        report("ready_right", -0.20, ready)
