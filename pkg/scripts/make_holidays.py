#!/usr/bin/env python3
"""Regenerate the shipped Italian national holiday calendar.

Fixed-date holidays plus Easter Monday (Gregorian computus, Anonymous
algorithm). Usage:

    python scripts/make_holidays.py [first_year] [last_year] > holidays_it.txt
"""

import datetime as dt
import sys

FIXED = [
    (1, 1, "Capodanno"),
    (1, 6, "Epifania"),
    (4, 25, "Liberazione"),
    (5, 1, "Festa del Lavoro"),
    (6, 2, "Festa della Repubblica"),
    (8, 15, "Ferragosto"),
    (11, 1, "Ognissanti"),
    (12, 8, "Immacolata Concezione"),
    (12, 25, "Natale"),
    (12, 26, "Santo Stefano"),
]


def easter_sunday(year: int) -> dt.date:
    a = year % 19
    b, c = divmod(year, 100)
    d, e = divmod(b, 4)
    f = (b + 8) // 25
    g = (b - f + 1) // 3
    h = (19 * a + b - d - g + 15) % 30
    i, k = divmod(c, 4)
    l = (32 + 2 * e + 2 * i - h - k) % 7
    m = (a + 11 * h + 22 * l) // 451
    month, day = divmod(h + l - 7 * m + 114, 31)
    return dt.date(year, month, day + 1)


def main() -> None:
    first = int(sys.argv[1]) if len(sys.argv) > 1 else 2013
    last = int(sys.argv[2]) if len(sys.argv) > 2 else 2032
    print("# Italian national holidays, one ISO-8601 date per line.")
    print(f"# Generated by scripts/make_holidays.py for {first}-{last}.")
    for year in range(first, last + 1):
        days = [(dt.date(year, m, d), name) for m, d, name in FIXED]
        days.append((easter_sunday(year) + dt.timedelta(days=1), "Lunedi dell'Angelo"))
        for day, name in sorted(days):
            print(f"{day.isoformat()}  # {name}")


if __name__ == "__main__":
    main()
