"""Spreadsheet oracle for the bundled inventory, source rates and q aggregate."""
import csv, pathlib
from fractions import Fraction

ROOT = pathlib.Path(__file__).resolve().parents[2]
fleet = list(csv.DictReader(open(ROOT / "data/g30ys/fleet.csv")))
ef = {(r["class"], r["pollutant"]): Fraction(r["ef_g_per_km"])
      for r in csv.DictReader(open(ROOT / "data/g30ys/ef.csv"))}
POLS = ["CO", "CO2", "NO2", "SO2", "PM2.5", "PM10"]
totals = {}
for p in POLS:
    t = Fraction(0)
    for r in fleet:
        t += Fraction(r["stock"]) * Fraction(r["annual_mileage_km"]) * ef[(r["class"], p)] / 1000
    totals[p] = t
for p in POLS:
    rate = totals[p] * Fraction(300, 118000) / 31_536_000
    print(f"{p:6s} total_kg_yr={float(totals[p])!r} rate_kg_s={float(rate)!r}")
q = sum(totals[p] for p in ["CO", "NO2", "PM2.5", "PM10"]) + Fraction(1, 2) * totals["CO2"] + 2 * totals["SO2"]
print("q(mu=1, alpha=0.5, beta=2) =", repr(float(q)))
print("grand total =", repr(float(sum(totals.values()))))
