import re


_MULTISPACE_RE = re.compile(r"\s+")
_LOCALE_RE = re.compile(r"^([A-Za-z]{2,3})[-_]([A-Za-z]{2})$")
_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")
_ACTOR_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


def normalize_text(value: str | None) -> str:
    return _MULTISPACE_RE.sub(" ", (value or "").strip())


def normalize_upper_text(value: str | None) -> str:
    return normalize_text(value).upper()


def normalize_country(value: str | None) -> str:
    return normalize_upper_text(value).replace(" ", "")


def is_country_code(value: str) -> bool:
    return bool(_COUNTRY_RE.match(value or ""))


def normalize_locale(value: str | None) -> str:
    raw = normalize_text(value)
    match = _LOCALE_RE.match(raw)
    if not match:
        return raw
    language, region = match.groups()
    return f"{language.lower()}_{region.upper()}"


def normalize_tool_name(value: str | None) -> str:
    return normalize_text(value)


def normalize_tools(values) -> list[str]:
    tools: list[str] = []
    for value in values or []:
        name = normalize_tool_name(str(value))
        if name:
            tools.append(name)
    return tools


def is_actor_id(value: str | None) -> bool:
    return bool(_ACTOR_ID_RE.match(value or ""))
