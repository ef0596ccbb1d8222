"""A full migration run against a mock model, start to finish.

Builds a throwaway dependency repository whose API breaks between two
commits, a one-file project using the old API, and a mock provider that
answers with the hand-migrated file. No network traffic is involved.

Run with: python demos/02_mock_migration.py
"""

import json
import subprocess
import tempfile
from pathlib import Path

from diffmigrate import (
    FileFilter,
    LibrarySpec,
    LlmClient,
    MigrationJob,
    MigrationStrategy,
    MockProvider,
    RepoRef,
    RetryPolicy,
    prepare_artifact,
)
from diffmigrate.migrate import run

LIB_V1 = 'def fetch(url, timeout):\n    return url + "?t=" + str(timeout)\n'
LIB_V2 = 'def fetch(url, *, timeout=None):\n    return url + "#t=" + str(timeout)\n'

APP_OLD = """\
from acme.api import fetch


def load():
    return fetch("srv", 5)
"""

# what a competent migration of APP_OLD looks like under the new API
APP_NEW = """\
from acme.api import fetch


def load():
    return fetch("srv", timeout=5)
"""


def git(repo, *args):
    subprocess.run(["git", "-C", str(repo), *args], check=True, capture_output=True)


def build_library_repo(root):
    repo = root / "acme_lib"
    repo.mkdir()
    git(repo, "init", "-q", "-b", "main")
    git(repo, "config", "user.email", "demo@example.invalid")
    git(repo, "config", "user.name", "Demo")
    (repo / "acme").mkdir()
    (repo / "acme" / "api.py").write_text(LIB_V1, encoding="utf-8")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "old api")
    (repo / "acme" / "api.py").write_text(LIB_V2, encoding="utf-8")
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", "keyword-only timeout")
    return repo


def main():
    with tempfile.TemporaryDirectory() as scratch:
        root = Path(scratch)
        lib_repo = build_library_repo(root)
        project = root / "project"
        project.mkdir()
        (project / "app.py").write_text(APP_OLD, encoding="utf-8")

        job = MigrationJob(
            source_dir=project,
            dest_dir=root / "migrated",
            files=(),
            library=LibrarySpec(
                "acme", "acme", RepoRef(lib_repo, "HEAD~1"), RepoRef(lib_repo, "HEAD")
            ),
            file_filter=FileFilter(),
            strategy=MigrationStrategy.WITH_DIFF,
            model="demo-model",
        )

        # 1. The with_diff strategy describes the dependency change to the
        #    model as a unified diff between the two library commits.
        print("library change shown to the model:")
        print(prepare_artifact(job))

        # 2. The mock stands in for a model that knows the answer.
        provider = MockProvider(reply_fn=lambda request: APP_NEW)
        client = LlmClient(provider, retry=RetryPolicy(max_retries=0))
        results = run(job, client)

        # 3. Each run writes the migrated tree plus a machine-readable
        #    report; the client keeps a usage ledger on the side.
        migrated = (job.dest_dir / "run_1" / "app.py").read_text(encoding="utf-8")
        print("migrated file:")
        print(migrated)
        assert migrated == APP_NEW

        report = json.loads(
            (job.dest_dir / "run_1" / "run.json").read_text(encoding="utf-8")
        )
        print("run report totals:", report["totals"])
        record = client.ledger.records[0]
        print(
            f"ledger: {record.prompt_tokens} prompt tokens, "
            f"{record.completion_tokens} completion tokens "
            f"for case {record.case!r} via {record.method!r}"
        )
        assert len(results) == 1


if __name__ == "__main__":
    main()
