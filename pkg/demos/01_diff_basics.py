"""A walk through the diff layer: compute, render, parse, apply.

Run with: python demos/01_diff_basics.py
"""

from diffmigrate import (
    apply_diff,
    change_blocks,
    myers_diff,
    parse_unified,
    render_unified,
)

OLD = """\
def greet(name):
    message = "hello " + name
    print(message)
    return message
"""

NEW = """\
def greet(name, punctuation="!"):
    message = "hello " + name + punctuation
    print(message)
    return message
"""


def main():
    # 1. Render a unified diff between two versions of a file. The output
    #    is byte-compatible with what `diff -u` would print.
    diff_text = render_unified(OLD, NEW, path="greeter.py")
    print("unified diff:")
    print(diff_text)

    # 2. The text form parses back into a structured diff, and applying
    #    that diff to the old text recovers the new text exactly.
    diff = parse_unified(diff_text)
    assert apply_diff(diff, OLD) == NEW
    print("applying the parsed diff recovers the new file, byte for byte")
    print()

    # 3. Underneath sits a shortest-edit-script search. The lines it
    #    keeps are a longest common subsequence of the two sides; on the
    #    classic character example the kept letters spell "pin".
    script = myers_diff(list("dolphin"), list("penguin"))
    print(f"dolphin vs penguin keeps {''.join(script.kept)!r}", end=", ")
    print(f"LCS length {script.lcs_length}")
    print()

    # 4. Consecutive changed lines fold into change blocks, the unit the
    #    evaluation layer counts when comparing two migrations.
    for block in change_blocks(OLD, NEW):
        print(
            f"block over old lines {block.old_range}: "
            f"{len(block.removed)} removed, {len(block.added)} added"
        )


if __name__ == "__main__":
    main()
