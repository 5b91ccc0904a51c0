#!/usr/bin/env python3

from pathlib import Path
import argparse
import importlib
import sys
from typing import List, NamedTuple, TextIO

from script_list import scripts_to_hooks

# Run this script whenever the command line of a script in the directory above
# changes. It writes README.md and detailed.md next to the scripts, neither of
# which may exist beforehand, as this script never overwrites them.
#
# Every script module must provide `make_parser`, from which the help messages
# are taken directly.


class Script(NamedTuple):
    name: str
    parser: argparse.ArgumentParser


def load_parser(hook: str) -> argparse.ArgumentParser:
    module_name, _ = hook.split(':')
    module = importlib.import_module(module_name)
    return module.make_parser()  # type: ignore


def get_scripts() -> List[Script]:
    return [
        Script(name, load_parser(scripts_to_hooks[name]))
        for name in sorted(scripts_to_hooks)
    ]


def get_overview(parser: argparse.ArgumentParser) -> str:
    description = parser.description or ""
    return " ".join(line.strip() for line in description.splitlines() if line.strip())


def write_autogen_disclaimer(output: TextIO) -> None:
    print("> **Note:** this file has been autogenerated. Do not edit manually.\n", file=output)


def write_detailed(scripts_path: Path, scripts: List[Script]) -> None:

    with open(scripts_path.joinpath("detailed.md"), 'x') as detailed_file:

        write_autogen_disclaimer(detailed_file)

        for script in scripts:
            script.parser.prog = script.name
            print(
f"""# `{script.name}`

```
{script.parser.format_help()}
```
""",
                file=detailed_file
            )


def write_overviews(scripts_path: Path, scripts: List[Script]) -> None:

    with open(scripts_path.joinpath("README.md"), 'x') as readme_file:

        write_autogen_disclaimer(readme_file)

        print(
f"""# Scripts overview

Given below are the descriptions of the provided scripts.
Full help messages can be found in the [`detailed.md`](./detailed.md) file.
""",
            file=readme_file
        )

        for script in scripts:
            print(f"## `{script.name}`\n\n{get_overview(script.parser)}\n", file=readme_file)


if __name__ == "__main__":

    scripts_path = Path(sys.argv[0]).resolve().parent.parent
    # The hooks name modules relative to the repository root
    sys.path.insert(0, str(scripts_path.parent))

    scripts = get_scripts()

    write_detailed(scripts_path, scripts)
    write_overviews(scripts_path, scripts)
