import argparse
import configparser
import hashlib
import json
import logging
import os
from typing import Any, Dict, Mapping, Optional

logger = logging.getLogger(__name__)

CONFIG_ENV = "DOCSEG_CONFIG"
GLOBAL = "global"
_NO_DEFAULTS = "__no_defaults__"


def config_path(flag: Optional[str]) -> Optional[str]:
    """The ``--config`` value, else the path in ``$DOCSEG_CONFIG``, else None."""
    return flag or os.environ.get(CONFIG_ENV) or None


def read_config_file(path: str) -> Dict[str, Dict[str, str]]:
    r"""Read ``key = value`` lines (``#`` comments allowed) grouped by section.

    Lines before the first ``[section]`` header belong to the ``global``
    section; every other section is named after the subcommand it configures.
    Keys use underscores or dashes interchangeably and are returned with
    underscores.

    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), strict=False,
                                       default_section=_NO_DEFAULTS)
    try:
        parser.read_string(f"[{GLOBAL}]\n" + text, source=str(path))
    except configparser.Error as err:
        raise ValueError(f"malformed config file {path}: {err}") from err
    return {name: {key.replace("-", "_"): value for key, value in parser.items(name, raw=True)}
            for name in parser.sections()}


def _convert(action: argparse.Action, raw: str) -> Any:
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        states = configparser.ConfigParser.BOOLEAN_STATES
        if raw.lower() not in states:
            raise ValueError(f"{action.dest}: expected a boolean, got {raw!r}")
        return states[raw.lower()]
    if action.nargs in ("+", "*"):
        return [action.type(v) if action.type else v for v in raw.split()]
    return action.type(raw) if action.type else raw


def _declaration(action: argparse.Action) -> str:
    return repr((type(action).__name__, action.type, action.default, action.choices, action.nargs))


def apply_file_defaults(subparsers: Mapping[str, argparse.ArgumentParser],
                        sections: Mapping[str, Mapping[str, str]]) -> None:
    r"""Install config file values as subcommand defaults.

    ``global`` keys go to every subcommand that has the option, and must be
    declared identically wherever they appear. A key such as ``max_sentences``
    that means different things to ``synth`` and ``train`` has to be placed
    under a ``[synth]`` or ``[train]`` section, whose keys reach only that
    subcommand and override global ones. Command-line flags still override
    both.

    Raises:
        ValueError: for unknown sections or keys, and for ambiguous global keys.

    """
    unknown = sorted(set(sections) - set(subparsers) - {GLOBAL})
    if unknown:
        raise ValueError(f"unknown config section [{unknown[0]}]")
    actions = {name: {a.dest: a for a in sub._actions if a.dest != "help"} for name, sub in subparsers.items()}

    shared = sections.get(GLOBAL, {})
    for key in shared:
        owners = [name for name in subparsers if key in actions[name]]
        if not owners:
            raise ValueError(f"unknown config key {key!r}")
        if len({_declaration(actions[name][key]) for name in owners}) > 1:
            raise ValueError(f"config key {key!r} means different things to {', '.join(owners)}; "
                             f"put it under a [subcommand] section")

    for name, sub in subparsers.items():
        scoped = sections.get(name, {})
        unknown = sorted(set(scoped) - set(actions[name]))
        if unknown:
            raise ValueError(f"unknown config key {unknown[0]!r} in [{name}]")
        values = {k: v for k, v in shared.items() if k in actions[name]}
        values.update(scoped)
        sub.set_defaults(**{k: _convert(actions[name][k], v) for k, v in values.items()})


def fingerprint(effective: Mapping[str, Any]) -> str:
    """First 12 hex digits of the SHA-256 of the sorted JSON form of ``effective``."""
    blob = json.dumps(dict(effective), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]
