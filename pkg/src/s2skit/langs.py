"""Spoken and sign language codes and the partner mapping between them."""

from __future__ import annotations

from enum import Enum

from .errors import DataError


class SpokenLang(str, Enum):
    EN = "en"
    ZH = "zh"
    DE = "de"


class SignLang(str, Enum):
    ASL = "ASL"
    CSL = "CSL"
    DGS = "DGS"


# Each sign language has exactly one spoken-language partner.
PARTNER = {
    SignLang.ASL: SpokenLang.EN,
    SignLang.CSL: SpokenLang.ZH,
    SignLang.DGS: SpokenLang.DE,
}

_SIGN_FOR_SPOKEN = {v: k for k, v in PARTNER.items()}


def partner(sign: SignLang) -> SpokenLang:
    return PARTNER[sign]


def sign_for_spoken(lang: SpokenLang) -> SignLang:
    """Inverse of the partner mapping (it is a bijection)."""
    return _SIGN_FOR_SPOKEN[lang]


def parse_spoken(code: str) -> SpokenLang:
    try:
        return SpokenLang(code)
    except ValueError:
        raise DataError(f"unknown spoken language {code!r} (expected one of en, zh, de)") from None


def parse_sign(code: str) -> SignLang:
    try:
        return SignLang(code)
    except ValueError:
        raise DataError(f"unknown sign language {code!r} (expected one of ASL, CSL, DGS)") from None


def direction_label(src: SignLang, tgt: SignLang) -> str:
    return f"{src.value}->{tgt.value}"
