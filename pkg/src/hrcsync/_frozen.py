"""Make read-only mappings survive pickling (process pools)."""

import copyreg
from types import MappingProxyType


def _thaw(d):
    return MappingProxyType(d)


def _reduce(m):
    return _thaw, (dict(m),)


copyreg.pickle(MappingProxyType, _reduce)
