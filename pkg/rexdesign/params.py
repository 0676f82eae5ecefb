import difflib
from enum import Enum
from typing import Any, Dict, List, Union


class ParamEnum(Enum):
    """An abstract class for resolving string options to enum members, case-insensitively."""

    @classmethod
    def _options(cls) -> Dict[str, Any]:
        return {option.name.lower(): option for option in cls}

    @classmethod
    def names(cls) -> List[str]:
        return sorted(cls._options().keys())

    @classmethod
    def _get_closest_option(cls, name: str) -> Union[str, None]:
        match = difflib.get_close_matches(
            word=name.lower(), possibilities=cls._options().keys(), n=1
        )
        return match[0] if match else None

    @classmethod
    def get_option(cls, name: Union[str, "ParamEnum"]) -> Any:
        """Return the member matching ``name``. Members pass through unchanged."""
        if isinstance(name, cls):
            return name

        try:
            return cls._options()[str(name).lower()]
        except KeyError:
            error_msg = f"Option must be in {cls.names()}, not '{name}'."

            closest = cls._get_closest_option(str(name))
            hint = f" Did you mean '{closest}'?" if closest else ""

            raise ValueError(error_msg + hint) from None
