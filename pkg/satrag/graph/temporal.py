# satrag
# See full license in LICENSE.txt.

"""
Pattern-based parsing and normalization of temporal header labels.

Canonical values nest: a day sits inside its month, a month or a quarter inside
its year. Year ranges and open ranges ("since 2019") are roots of their own.
Fiscal-year phrases map onto calendar years.
"""

import calendar
import datetime
import logging
import re

logger = logging.getLogger(__name__)

YEAR = 'year'
QUARTER = 'quarter'
MONTH = 'month'
DAY = 'day'
INTERVAL = 'interval'
UNDATED = 'undated'

# granularity rank, finer is larger
GRANULARITY = {UNDATED: -1, INTERVAL: 0, YEAR: 1, QUARTER: 2, MONTH: 3, DAY: 4}

MIN_YEAR = 1900
MAX_YEAR = 2100

MONTHS = {
    'jan': 1, 'january': 1,
    'feb': 2, 'february': 2,
    'mar': 3, 'march': 3,
    'apr': 4, 'april': 4,
    'may': 5,
    'jun': 6, 'june': 6,
    'jul': 7, 'july': 7,
    'aug': 8, 'august': 8,
    'sep': 9, 'sept': 9, 'september': 9,
    'oct': 10, 'october': 10,
    'nov': 11, 'november': 11,
    'dec': 12, 'december': 12,
}

ORDINAL_QUARTERS = {
    '1st': 1, 'first': 1,
    '2nd': 2, 'second': 2,
    '3rd': 3, 'third': 3,
    '4th': 4, 'fourth': 4,
}

_MONTH_RE = r'(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|' \
            r'sept?(?:ember)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\.?'
_YEAR_RE = r'(\d{4})'
_ORD_RE = r'(1st|2nd|3rd|4th|first|second|third|fourth)'


class TemporalValue(object):
    """
    Canonical temporal value.

    Parameters
    ----------
    kind : str
        one of year, quarter, month, day, interval, undated
    year : int
        (start) year
    quarter, month, day : int, optional
    end_year : int, optional
        last year of an interval, None for an open interval
    """

    __slots__ = ('kind', 'year', 'quarter', 'month', 'day', 'end_year')

    def __init__(self, kind, year=None, quarter=None, month=None, day=None, end_year=None):
        self.kind = kind
        self.year = year
        self.quarter = quarter
        self.month = month
        self.day = day
        self.end_year = end_year

    def _fields(self):
        return (self.kind, self.year, self.quarter, self.month, self.day, self.end_year)

    def __eq__(self, other):
        return isinstance(other, TemporalValue) and self._fields() == other._fields()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self._fields())

    def __bool__(self):
        return True

    def __repr__(self):
        return "TemporalValue(%s)" % self.key

    @property
    def key(self):
        """canonical text form; normalize_temporal(v.key) == v"""
        if self.kind == YEAR:
            return '%04d' % self.year
        if self.kind == QUARTER:
            return '%04d-Q%d' % (self.year, self.quarter)
        if self.kind == MONTH:
            return '%04d-%02d' % (self.year, self.month)
        if self.kind == DAY:
            return '%04d-%02d-%02d' % (self.year, self.month, self.day)
        if self.kind == INTERVAL:
            end = '..' if self.end_year is None else '%04d' % self.end_year
            return '%04d/%s' % (self.year, end)
        return UNDATED

    @property
    def granularity(self):
        return GRANULARITY[self.kind]

    def parent(self):
        if self.kind == DAY:
            return TemporalValue(MONTH, self.year, month=self.month)
        if self.kind in (MONTH, QUARTER):
            return TemporalValue(YEAR, self.year)
        return None

    def chain(self):
        """this value followed by its ancestors, finest first"""
        chain = [self]
        p = self.parent()
        while p is not None:
            chain.append(p)
            p = p.parent()
        return chain

    def interval(self):
        """inclusive (start, end) dates; undated values span everything"""
        if self.kind == YEAR:
            return datetime.date(self.year, 1, 1), datetime.date(self.year, 12, 31)
        if self.kind == QUARTER:
            first = 3 * (self.quarter - 1) + 1
            last = first + 2
            return (datetime.date(self.year, first, 1),
                    datetime.date(self.year, last, calendar.monthrange(self.year, last)[1]))
        if self.kind == MONTH:
            return (datetime.date(self.year, self.month, 1),
                    datetime.date(self.year, self.month,
                                  calendar.monthrange(self.year, self.month)[1]))
        if self.kind == DAY:
            d = datetime.date(self.year, self.month, self.day)
            return d, d
        if self.kind == INTERVAL:
            end = datetime.date.max if self.end_year is None \
                else datetime.date(self.end_year, 12, 31)
            return datetime.date(self.year, 1, 1), end
        return datetime.date.min, datetime.date.max

    def contains(self, other):
        start, end = self.interval()
        o_start, o_end = other.interval()
        return start <= o_start and o_end <= end

    def sort_key(self):
        start, end = self.interval()
        return start, end, self.granularity


class _NotTemporal(object):
    """marker value returned for labels carrying no temporal token"""

    def __bool__(self):
        return False

    def __repr__(self):
        return 'NOT_TEMPORAL'


NOT_TEMPORAL = _NotTemporal()

UNDATED_VALUE = TemporalValue(UNDATED)


def _year(s):
    y = int(s)
    if MIN_YEAR <= y <= MAX_YEAR:
        return y
    return None


def _day(y, m, d):
    try:
        datetime.date(y, m, d)
    except ValueError:
        return None
    return TemporalValue(DAY, y, month=m, day=d)


def _match_iso_day(m):
    y = _year(m.group(1))
    return y and _day(y, int(m.group(2)), int(m.group(3)))


def _match_iso_month(m):
    y, month = _year(m.group(1)), int(m.group(2))
    if y and 1 <= month <= 12:
        return TemporalValue(MONTH, y, month=month)


def _match_range(m):
    start, end = _year(m.group(1)), _year(m.group(2))
    if start and end and end > start:
        return TemporalValue(INTERVAL, start, end_year=end)


def _match_open(m):
    y = _year(m.group(1))
    return y and TemporalValue(INTERVAL, y)


def _match_quarter(m):
    y = _year(m.group(2))
    return y and TemporalValue(QUARTER, y, quarter=int(m.group(1)))


def _match_year_quarter(m):
    y = _year(m.group(1))
    return y and TemporalValue(QUARTER, y, quarter=int(m.group(2)))


def _match_ordinal_quarter(m):
    y = _year(m.group(2))
    return y and TemporalValue(QUARTER, y, quarter=ORDINAL_QUARTERS[m.group(1).lower()])


def _match_month_day_year(m):
    y = _year(m.group(3))
    return y and _day(y, MONTHS[m.group(1).lower().rstrip('.')], int(m.group(2)))


def _match_day_month_year(m):
    y = _year(m.group(3))
    return y and _day(y, MONTHS[m.group(2).lower().rstrip('.')], int(m.group(1)))


def _match_month_year(m):
    y = _year(m.group(2))
    return y and TemporalValue(MONTH, y, month=MONTHS[m.group(1).lower().rstrip('.')])


def _match_year(m):
    y = _year(m.group(1))
    return y and TemporalValue(YEAR, y)


# (pattern, builder); tried in order against the whole (stripped) label
PATTERNS = [
    (r'%s-(\d{1,2})-(\d{1,2})' % _YEAR_RE, _match_iso_day),
    (r'%s\s*(?:-|–|—|to|through|/)\s*%s' % (_YEAR_RE, _YEAR_RE), _match_range),
    (r'%s/\.\.' % _YEAR_RE, _match_open),
    (r'(?:since|after|from)\s+%s' % _YEAR_RE, _match_open),
    (r'%s-(\d{1,2})' % _YEAR_RE, _match_iso_month),
    (r'q([1-4])\s*[-/]?\s*(?:fy\s*)?%s' % _YEAR_RE, _match_quarter),
    (r'([1-4])q\s*[-/]?\s*%s' % _YEAR_RE, _match_quarter),
    (r'%s\s*[-/]?\s*q([1-4])' % _YEAR_RE, _match_year_quarter),
    (r'%s\s+quarter(?:\s+of)?\s+%s' % (_ORD_RE, _YEAR_RE), _match_ordinal_quarter),
    (r'%s\s+(\d{1,2}),?\s+%s' % (_MONTH_RE, _YEAR_RE), _match_month_day_year),
    (r'(\d{1,2})\s+%s,?\s+%s' % (_MONTH_RE, _YEAR_RE), _match_day_month_year),
    (r'%s,?\s+%s' % (_MONTH_RE, _YEAR_RE), _match_month_year),
    (r'(?:fy|fiscal(?:\s+year)?)\s*\'?%s' % _YEAR_RE, _match_year),
    (r'(?:fiscal\s+)?years?\s+end(?:ed|ing)(?:\s+%s\s+\d{1,2},?)?\s+%s' % (_MONTH_RE, _YEAR_RE),
     lambda m: _match_year_group(m, 2)),
    (r'(?:year\s+)?%s' % _YEAR_RE, _match_year),
]

_COMPILED = [(re.compile(r'^\s*%s\s*$' % p, re.IGNORECASE), f) for p, f in PATTERNS]


def _match_year_group(m, group):
    y = _year(m.group(group))
    return y and TemporalValue(YEAR, y)


def normalize_temporal(raw):
    """
    Normalize a header label into a canonical temporal value.

    Recognized forms: 4-digit years, "Qn YYYY"/"YYYY Qn", "Month YYYY", ISO dates
    YYYY-MM[-DD], "Month D, YYYY", "FY YYYY" and "year ended ... YYYY" (calendar year),
    year ranges and open ranges. The full parent chain is available through
    ``value.chain()``.

    Parameters
    ----------
    raw : str

    Returns
    -------
    value : TemporalValue or NOT_TEMPORAL
    """
    if raw is None:
        return NOT_TEMPORAL

    text = raw.strip().rstrip(':').strip()
    if not text:
        return NOT_TEMPORAL

    for regex, builder in _COMPILED:
        m = regex.match(text)
        if m:
            value = builder(m)
            if value:
                return value

    return NOT_TEMPORAL


_BARE_QUARTER = re.compile(r'^\s*(?:q([1-4])|%s\s+quarter)\s*$' % _ORD_RE, re.IGNORECASE)
_BARE_MONTH = re.compile(r'^\s*%s\s*$' % _MONTH_RE, re.IGNORECASE)


def is_bare_period(label):
    """True for a quarter or month label carrying no year ("Q2", "March")"""
    return bool(_BARE_QUARTER.match(label or '') or _BARE_MONTH.match(label or ''))


def combine_with_year(label, year):
    """
    Normalize a bare period label nested under a year header.

    Returns NOT_TEMPORAL unless label is a bare period.
    """
    if not is_bare_period(label):
        return NOT_TEMPORAL
    return normalize_temporal("%s %04d" % (label.strip(), year))


# free-text mentions, most specific first; bare quarters are accepted in queries
_MENTIONS = [
    r'\b\d{4}-\d{1,2}-\d{1,2}\b',
    r'\b%s\s+\d{1,2},?\s+\d{4}\b' % _MONTH_RE,
    r'\bq[1-4]\s*[-/]?\s*(?:fy\s*)?\d{4}\b',
    r'\b\d{4}\s*[-/]?\s*q[1-4]\b',
    r'\b%s\s+quarter(?:\s+of)?\s+\d{4}\b' % _ORD_RE,
    r'\b%s,?\s+\d{4}\b' % _MONTH_RE,
    r'\b(?:fy|fiscal(?:\s+year)?)\s*\'?\d{4}\b',
    r'\b\d{4}\s*(?:-|–|—|to|through)\s*\d{4}\b',
    r'\b(?:since|after)\s+\d{4}\b',
    r'\b\d{4}-\d{1,2}\b',
    r'\b\d{4}\b',
    r'\bq[1-4]\b',
]
_MENTION_RE = re.compile('|'.join('(?:%s)' % p for p in _MENTIONS), re.IGNORECASE)


def find_temporal(text):
    """
    Find the first temporal mention in free text.

    Parameters
    ----------
    text : str

    Returns
    -------
    (mention, value) : (str, TemporalValue or None)
        value is None for a bare quarter such as "Q2"; (None, None) if nothing found
    """
    for m in _MENTION_RE.finditer(text or ''):
        mention = m.group(0)
        value = normalize_temporal(mention)
        if value:
            return mention, value
        if is_bare_period(mention):
            return mention, None
    return None, None


def parse_key(key):
    """inverse of TemporalValue.key, including the undated marker"""
    if key == UNDATED:
        return UNDATED_VALUE
    return normalize_temporal(key)
