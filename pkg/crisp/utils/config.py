"""Configuration file loading and option merging."""

from __future__ import annotations

import logging
from typing import Any, Callable, Mapping, Optional, TypeVar

import yaml

from crisp.errors import InvalidArgumentError


logger = logging.getLogger(__name__)


_T = TypeVar('_T')


def normalize_key(key: str) -> str:
    """Normalize a configuration key.

    Keys may be written in flag style (``budget-ratio``) or attribute
    style (``budget_ratio``).

    Args:
        key (str):
            The key to normalize.

    Returns:
        str:
        The normalized key.
    """
    return key.strip().replace('-', '_')


def load_config_file(path: str) -> dict[str, Any]:
    """Load a configuration file.

    The file may be JSON or YAML. JSON documents are valid YAML, so both are
    read through the same loader.

    Args:
        path (str):
            The path to the configuration file.

    Returns:
        dict:
        The configuration, with normalized keys.

    Raises:
        OSError:
            The file could not be read.

        crisp.errors.InvalidArgumentError:
            The file did not contain a mapping.
    """
    with open(path, 'r') as fp:
        try:
            doc = yaml.safe_load(fp)
        except yaml.YAMLError as e:
            raise InvalidArgumentError(
                'Unable to parse configuration file "%s": %s' % (path, e))

    if doc is None:
        doc = {}
    elif not isinstance(doc, dict):
        raise InvalidArgumentError(
            'The configuration file "%s" must contain a mapping of options.'
            % path)

    logger.debug('Loaded %d configuration keys from %s', len(doc), path)

    return {
        normalize_key(str(key)): value
        for key, value in doc.items()
    }


def merge_options(
    *,
    options: Mapping[str, Any],
    file_config: Optional[Mapping[str, Any]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
) -> dict[str, Any]:
    """Merge options from the command line, a config file, and defaults.

    Command line options win over the config file, which wins over the
    defaults. A command line option of ``None`` means the flag wasn't given.

    Args:
        options (dict):
            The parsed command line options.

        file_config (dict, optional):
            Options loaded from a configuration file.

        defaults (dict, optional):
            Default values.

    Returns:
        dict:
        The merged options.
    """
    result: dict[str, Any] = {}

    for source in (defaults or {}, file_config or {}):
        for key, value in source.items():
            result[normalize_key(key)] = value

    for key, value in options.items():
        if value is not None:
            result[normalize_key(key)] = value

    return result


def as_list(
    value: Any,
    item_type: Callable[[Any], _T],
) -> list[_T]:
    """Normalize a list option.

    Lists may come from a configuration file as real lists, or from the
    command line as comma-separated strings.

    Args:
        value (object):
            The option value. ``None`` results in an empty list.

        item_type (callable):
            The conversion applied to every item.

    Returns:
        list:
        The converted items.

    Raises:
        crisp.errors.InvalidArgumentError:
            An item couldn't be converted.
    """
    if value is None:
        return []

    if isinstance(value, str):
        items: list[Any] = [
            item.strip()
            for item in value.split(',')
            if item.strip()
        ]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]

    try:
        return [item_type(item) for item in items]
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError('Invalid list value %r: %s' % (value, e))
