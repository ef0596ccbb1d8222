"""Scoring candidate migrations against a known-good reference.

Three in-memory trees play the roles: the original project, the
reference migration a maintainer wrote by hand, and two model attempts.
Matching compares change blocks, so whole-file similarity never inflates
the score.

Run with: python demos/03_edit_matching.py
"""

from diffmigrate import FileEntry, FileSet, match_edits, union_runs
from diffmigrate.evaluate import reports_to_csv

ORIGINAL = """\
import client

conn = client.connect("db", 5432)
print("connected")
rows = conn.query("select 1")
conn.close()
print(rows)
"""

# the hand migration: connect takes a URL now, query grew a timeout
REFERENCE = """\
import client

conn = client.connect("db:5432")
print("connected")
rows = conn.query("select 1", timeout=30)
conn.close()
print(rows)
"""

# first attempt: nails the connect change, misses the query change
ATTEMPT_ONE = """\
import client

conn = client.connect("db:5432")
print("connected")
rows = conn.query("select 1")
conn.close()
print(rows)
"""

# second attempt: nails the query change, botches connect differently
ATTEMPT_TWO = """\
import client

conn = client.connect(url="db:5432")
print("connected")
rows = conn.query("select 1", timeout=30)
conn.close()
print(rows)
"""


def tree(text):
    return FileSet([FileEntry("main.py", text)])


def main():
    original = tree(ORIGINAL)
    reference = tree(REFERENCE)
    attempts = [tree(ATTEMPT_ONE), tree(ATTEMPT_TWO)]

    # 1. Per-run reports: recall is the share of reference blocks the
    #    attempt reproduced exactly; precision is the share of the
    #    attempt's own blocks that were right.
    for index, attempt in enumerate(attempts, start=1):
        report = match_edits(original, reference, attempt)
        print(
            f"attempt {index}: {report.matched_exact}/{report.reference_blocks} "
            f"reference blocks exact, recall {report.recall}, "
            f"precision {report.precision}, location rate {report.location_rate}"
        )
    print()

    # 2. Runs complement each other: the union over both attempts covers
    #    every reference block even though neither run did alone.
    cumulative = union_runs(original, reference, attempts)
    print("cumulative report after each run:")
    print(reports_to_csv(cumulative))


if __name__ == "__main__":
    main()
