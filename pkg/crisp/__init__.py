"""Approximate nearest-neighbor search over correlation-aware subspace indexes.

The public entry points are re-exported from the subpackages:

* :py:mod:`crisp.datasets` -- vector file formats, exact search and recall.
* :py:mod:`crisp.preprocessing` -- the spectral check and adaptive rotation.
* :py:mod:`crisp.index` -- codebook training and the CSR posting index.
* :py:mod:`crisp.search` -- the dual-mode query engine.
* :py:mod:`crisp.theory` -- collision-count recall bounds.
"""

from __future__ import annotations


# The version of CRISP.
#
# This is in the format of:
#
#   (Major, Minor, Micro, Patch, alpha/beta/rc/final, Release Number, Released)
#
VERSION = (0, 3, 0, 0, 'beta', 1, False)


def get_package_version() -> str:
    """Return the version as a PEP 440-compatible string.

    Returns:
        str:
        The package version (for example, ``0.3b1``).
    """
    major, minor, micro, patch, tag, release_num = VERSION[:6]
    version = '%s.%s' % (major, minor)

    if micro or patch:
        version += '.%s' % micro

        if patch:
            version += '.%s' % patch

    if tag != 'final':
        tag_abbrev = {
            'alpha': 'a',
            'beta': 'b',
        }.get(tag, tag)

        version += '%s%s' % (tag_abbrev, release_num)

    return version


def is_release() -> bool:
    """Return whether this is a released version.

    Returns:
        bool:
        ``True`` if the package is a tagged release.
    """
    return VERSION[6]


__version_info__ = VERSION[:-1]
__version__ = get_package_version()
