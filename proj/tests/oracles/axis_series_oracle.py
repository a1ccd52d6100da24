"""Series-sum oracle for graded-axis cell counts.

Counts come from closed-form geometric sums rather than cell-by-cell
marching. A side of length L grows from h0 by ratio r with terms capped at
h_max; its count is the fewest terms whose capped sum covers L. The
generator then lowers the ratio so the same count fills L exactly, which
does not change the count.
"""
import math

def side_count(length, h0, r, hmax):
    if length <= 0:
        return 0
    if r == 1.0 or h0 >= hmax:
        return max(1, math.ceil(length / hmax - 1e-9))
    # growth terms strictly below the cap
    g = max(0, math.ceil(math.log(hmax / h0) / math.log(r) - 1e-12))
    grow = h0 * (r**g - 1) / (r - 1)
    if length <= grow * (1 + 1e-12):
        n = math.log(1 + length * (r - 1) / h0) / math.log(r)
        return max(1, math.ceil(n - 1e-9))
    return g + math.ceil((length - grow) / hmax - 1e-9)


def axis_count(extent, hmin, hmax, r, band):
    a, b = band
    nb = math.ceil((b - a) / hmin - 1e-9) if b > a else 0
    hb = (b - a) / nb if nb else hmin
    h0 = hb * r if nb else hmin
    return nb + side_count(a, h0, r, hmax) + side_count(extent - b, h0, r, hmax)

PRESETS = {
    # name: [(extent, min, max, ratio, band) for x, y, z]
    "coarse": [(1225.5, 2.0, 25.0, 1.2, (600.0, 625.5)),
               (300.0, 4.0, 25.0, 1.2, (130.0, 170.0)),
               (300.0, 1.0, 25.0, 1.2, (0.0, 1.0))],
    "medium": [(1225.5, 1.0, 12.5, 1.2, (600.0, 625.5)),
               (300.0, 2.5, 12.5, 1.2, (130.0, 170.0)),
               (300.0, 0.5, 12.5, 1.2, (0.0, 1.0))],
    "paper":  [(1225.5, 0.5, 5.0, 1.2, (600.0, 625.5)),
               (300.0, 0.5, 5.0, 1.2, (146.0, 154.0)),
               (300.0, 0.5, 5.0, 1.2, (0.0, 1.0))],
}

if __name__ == "__main__":
    print("lateral 300 m, 0.5/5/1.2, band [130,170]:", axis_count(300.0, 0.5, 5.0, 1.2, (130.0, 170.0)))
    print("uniform 10 m / 1 m:", axis_count(10.0, 1.0, 1.0, 1.2, (0.0, 0.0)))
    for name, axes in PRESETS.items():
        counts = [axis_count(*ax) for ax in axes]
        print(name, counts, counts[0] * counts[1] * counts[2])
