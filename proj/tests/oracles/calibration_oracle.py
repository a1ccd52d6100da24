"""Spreadsheet-style recomputation of the roadside calibration table.

Reads the bundled field and simulated CSVs, adds 70% of each ambient
ceiling (expressed in the row's own unit) and writes the expected error
table that the C++ tests compare against.
"""
import csv
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = ROOT / "data" / "g30ys"

LIMITS = {  # value, unit
    "CO": (4.0, "mg/m3"),
    "CO2": (1500.0, "mg/m3"),
    "NO2": (40.0, "ug/m3"),
    "PM2.5": (35.0, "ug/m3"),
    "PM10": (40.0, "ug/m3"),
    "SO2": (20.0, "ug/m3"),
}
TO_UG = {"ug/m3": 1.0, "mg/m3": 1e3, "kg/m3": 1e9}


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def main(out):
    sim = {(r["pollutant"], float(r["distance_m"])): (float(r["sim_value"]), r["unit"]) for r in rows(DATA / "table2_simulated.csv")}
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["pollutant", "distance_m", "field", "adjusted", "absolute_error", "relative_error"])
    for r in rows(DATA / "field_measurements.csv"):
        p, d, unit = r["pollutant"], float(r["distance_m"]), r["unit"]
        field = float(r["field_value"])
        s, su = sim[(p, d)]
        s = s * TO_UG[su] / TO_UG[unit]
        lim, lu = LIMITS[p]
        bg = 0.7 * lim * TO_UG[lu] / TO_UG[unit]
        adj = s + bg
        ae = abs(adj - field)
        re = ae / max(abs(field), 1e-12)
        w.writerow([p, repr(d), repr(field), repr(adj), repr(ae), repr(re)])


if __name__ == "__main__":
    main(sys.stdout)
