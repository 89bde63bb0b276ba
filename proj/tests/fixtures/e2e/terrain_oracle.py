"""Independent terrain computation for the e2e fixture DEM.

Fills depressions by iterative relaxation (not a priority queue), routes D8
by brute force, accumulates area by walking every cell's flow path and
finds HAND by walking to the first drainage cell. Writes the per-index
min/max/mean summary to terrain_oracle.json next to this script.
"""
import json
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
ROW = [0, 1, 1, 1, 0, -1, -1, -1]
COL = [1, 1, 0, -1, -1, -1, 0, 1]


def read_asc(path):
    with open(path) as f:
        header = {}
        for _ in range(6):
            key, value = f.readline().split()
            header[key.lower()] = float(value)
        values = [float(v) for v in f.read().split()]
    nrows, ncols = int(header["nrows"]), int(header["ncols"])
    grid = [values[r * ncols:(r + 1) * ncols] for r in range(nrows)]
    return grid, header["cellsize"], header["nodata_value"]


def neighbors(r, c, nrows, ncols):
    for k in range(8):
        rr, cc = r + ROW[k], c + COL[k]
        if 0 <= rr < nrows and 0 <= cc < ncols:
            yield k, rr, cc


def main():
    cfg = json.load(open(os.path.join(HERE, "config.json")))["terrain"]
    eps, tan_min, threshold = cfg["fill_epsilon"], cfg["tan_beta_min"], cfg["drainage_threshold_m2"]
    dem, size, nodata = read_asc(os.path.join(HERE, "dem.asc"))
    nr, nc = len(dem), len(dem[0])
    valid = [[dem[r][c] != nodata for c in range(nc)] for r in range(nr)]

    def boundary(r, c):
        if r in (0, nr - 1) or c in (0, nc - 1):
            return True
        return any(not valid[rr][cc] for _, rr, cc in neighbors(r, c, nr, nc))

    w = [[math.inf] * nc for _ in range(nr)]
    for r in range(nr):
        for c in range(nc):
            if valid[r][c] and boundary(r, c):
                w[r][c] = dem[r][c]
    changed = True
    while changed:
        changed = False
        for r in range(nr):
            for c in range(nc):
                if not valid[r][c] or w[r][c] <= dem[r][c]:
                    continue
                for _, rr, cc in neighbors(r, c, nr, nc):
                    if not valid[rr][cc]:
                        continue
                    spill = w[rr][cc] + eps
                    if dem[r][c] >= spill:
                        w[r][c] = dem[r][c]
                        changed = True
                        break
                    if w[r][c] > spill:
                        w[r][c] = spill
                        changed = True

    direction = [[-1] * nc for _ in range(nr)]
    slope = [[None] * nc for _ in range(nr)]
    for r in range(nr):
        for c in range(nc):
            if not valid[r][c]:
                continue
            best, best_drop, best_len = 0.0, 0.0, size
            for k, rr, cc in neighbors(r, c, nr, nc):
                if not valid[rr][cc]:
                    continue
                drop = w[r][c] - w[rr][cc]
                length = size * math.sqrt(2.0) if k % 2 else size
                if drop > 0 and drop / length > best:
                    best, best_drop, best_len = drop / length, drop, length
                    direction[r][c] = k
            slope[r][c] = math.degrees(math.atan(best_drop / best_len)) if direction[r][c] >= 0 else 0.0

    def downstream(r, c):
        k = direction[r][c]
        return None if k < 0 else (r + ROW[k], c + COL[k])

    count = [[0] * nc for _ in range(nr)]
    for r in range(nr):
        for c in range(nc):
            if not valid[r][c]:
                continue
            cell = (r, c)
            while cell is not None:
                count[cell[0]][cell[1]] += 1
                cell = downstream(*cell)
    area = [[count[r][c] * size * size if valid[r][c] else None for c in range(nc)] for r in range(nr)]
    twi = [[math.log(area[r][c] / max(math.tan(math.radians(slope[r][c])), tan_min)) if valid[r][c] else None
            for c in range(nc)] for r in range(nr)]

    drain = [[valid[r][c] and area[r][c] >= threshold for c in range(nc)] for r in range(nr)]
    hand = [[None] * nc for _ in range(nr)]
    for r in range(nr):
        for c in range(nc):
            if not valid[r][c]:
                continue
            cell = (r, c)
            while cell is not None and not drain[cell[0]][cell[1]]:
                cell = downstream(*cell)
            if cell is not None:
                hand[r][c] = max(0.0, dem[r][c] - dem[cell[0]][cell[1]])

    def summary(grid):
        v = [x for row in grid for x in row if x is not None]
        return {"valid": len(v), "min": min(v), "max": max(v), "mean": math.fsum(v) / len(v)}

    out = {
        "valid_cells": sum(map(sum, valid)),
        "drainage_cells": sum(map(sum, drain)),
        "hand_unreachable": sum(1 for r in range(nr) for c in range(nc) if valid[r][c] and hand[r][c] is None),
        "slope": summary(slope),
        "twi": summary(twi),
        "hand": summary(hand),
        "upslope_area": summary(area),
    }
    with open(os.path.join(HERE, "terrain_oracle.json"), "w") as f:
        json.dump(out, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
