# satrag
# See full license in LICENSE.txt.

import json
import logging
import os
import re
from collections import namedtuple
from html import escape
from html.parser import HTMLParser

from .errors import MalformedInput, EmptyDocument, MultipleTables, HeaderDetectionAmbiguous
from .graph.temporal import normalize_temporal

logger = logging.getLogger(__name__)

MARKDOWN = 'markdown'
HTML_TABLE = 'html-table'
STRUCTURED_GRID = 'structured-grid'

ROW_HEADER = 'row-header'
COLUMN_HEADER = 'column-header'

FLAT_1D = 'flat-1d'
FLAT_2D = 'flat-2d'
HIERARCHICAL_1D = 'hierarchical-1d'
HIERARCHICAL_2D = 'hierarchical-2d'

# input file extension -> document format
FILE_FORMATS = {
    '.md': MARKDOWN,
    '.markdown': MARKDOWN,
    '.txt': MARKDOWN,
    '.json': STRUCTURED_GRID,
}

Span = namedtuple('Span', ['row', 'col', 'row_span', 'col_span'])

# origin is the coordinate of the span origin the annotation was propagated from
HeaderAnnotation = namedtuple('HeaderAnnotation', ['coordinate', 'header_type', 'tier', 'origin'])


class RawCell(object):

    __slots__ = ('row', 'col', 'content', 'is_header')

    def __init__(self, row, col, content, is_header=False):
        self.row = row
        self.col = col
        self.content = content
        self.is_header = is_header

    def __repr__(self):
        return "RawCell(%s, %s, %r)" % (self.row, self.col, self.content)


class ParseReport(object):
    """
    Repairs applied while parsing a table

    padded_rows holds (row index, original width) for every short row
    that was padded with empty cells.
    """

    def __init__(self):
        self.padded_rows = []

    def pad(self, row, width):
        self.padded_rows.append((row, width))

    def __bool__(self):
        return bool(self.padded_rows)


class Passage(object):

    def __init__(self, passage_id, text, position, doc_id=None):
        self.passage_id = passage_id
        self.text = text
        self.position = position
        self.doc_id = doc_id

    @property
    def uid(self):
        return "%s/%s" % (self.doc_id, self.passage_id)

    def __repr__(self):
        return "Passage(%s)" % self.uid


class Table(object):
    """
    A table with its grid expanded over merged cells

    Cells covered by a span (other than its top-left origin) repeat the
    origin content so every row has the same length.
    """

    def __init__(self, table_id, caption, grid, spans=None, doc_id=None, position=0,
                 parse_report=None):
        self.table_id = table_id
        self.caption = caption or ''
        self.grid = grid
        self.spans = list(spans or [])
        self.doc_id = doc_id
        self.position = position
        self.category = None
        self.parse_report = parse_report or ParseReport()

        self.covered = {}
        for span in self.spans:
            for r in range(span.row, span.row + span.row_span):
                for c in range(span.col, span.col + span.col_span):
                    if (r, c) != (span.row, span.col):
                        self.covered[(r, c)] = (span.row, span.col)

    @property
    def n_rows(self):
        return len(self.grid)

    @property
    def n_cols(self):
        return len(self.grid[0]) if self.grid else 0

    @property
    def shape(self):
        return self.n_rows, self.n_cols

    def cell(self, row, col):
        return self.grid[row][col]

    def content(self, row, col):
        return self.grid[row][col].content

    def contents(self):
        return [[cell.content for cell in row] for row in self.grid]

    def origin(self, row, col):
        """coordinate of the span origin covering (row, col), or (row, col) itself"""
        return self.covered.get((row, col), (row, col))

    def span_at(self, row, col):
        for span in self.spans:
            if (span.row, span.col) == (row, col):
                return span
        return None

    def __repr__(self):
        return "Table(%s/%s %sx%s)" % (self.doc_id, self.table_id, self.n_rows, self.n_cols)


class Document(object):

    def __init__(self, doc_id, title, passages=None, tables=None, entity=''):
        self.doc_id = doc_id
        self.title = title or ''
        self.passages = list(passages or [])
        self.tables = list(tables or [])
        self.entity = entity or ''

        for item in self.passages + self.tables:
            item.doc_id = doc_id

    def __repr__(self):
        return "Document(%s, %s passages, %s tables)" % \
            (self.doc_id, len(self.passages), len(self.tables))


def is_numeric(text):
    """
    True if text parses as a number after stripping currency symbols,
    thousands separators, percent signs, parentheses and sign.

    Temporal labels ("2019", "Q2 2019") are not numeric.
    """
    text = (text or '').strip()
    if not text:
        return False
    if normalize_temporal(text):
        return False
    stripped = re.sub(r'[\s$€£¥,%()+\-−–]', '', text)
    return bool(re.match(r'^(\d+\.?\d*|\.\d+)$', stripped))


def _build_grid(rows, spans, source=None):
    """
    place cell contents and validate spans; rows must already be rectangular
    """
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0

    seen = {}
    for span in spans:
        if span.row_span < 1 or span.col_span < 1:
            raise MalformedInput("span %s has non-positive extent" % (span, ), source=source)
        if span.row < 0 or span.col < 0 or \
                span.row + span.row_span > n_rows or span.col + span.col_span > n_cols:
            raise MalformedInput("span %s lies outside the %sx%s grid" % (span, n_rows, n_cols),
                                 source=source)
        for r in range(span.row, span.row + span.row_span):
            for c in range(span.col, span.col + span.col_span):
                if (r, c) in seen:
                    raise MalformedInput("span %s overlaps span %s" % (span, seen[(r, c)]),
                                         source=source)
                seen[(r, c)] = span

    grid = [[RawCell(r, c, rows[r][c]) for c in range(n_cols)] for r in range(n_rows)]
    for span in spans:
        for r in range(span.row, span.row + span.row_span):
            for c in range(span.col, span.col + span.col_span):
                grid[r][c].content = rows[span.row][span.col]
    return grid


def _pad_rows(rows, report):
    width = max(len(r) for r in rows) if rows else 0
    padded = []
    for i, row in enumerate(rows):
        if len(row) < width:
            report.pad(i, len(row))
            row = row + [''] * (width - len(row))
        padded.append(row)
    return padded


# markdown pipe tables

_SEPARATOR = re.compile(r'^\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?\s*$')


def _is_pipe_line(line):
    return line.strip().startswith('|')


def _split_pipe_row(line):
    line = line.strip()
    if line.startswith('|'):
        line = line[1:]
    if line.endswith('|') and not line.endswith('\\|'):
        line = line[:-1]
    cells = re.split(r'(?<!\\)\|', line)
    return [c.strip().replace('\\|', '|') for c in cells]


def _parse_markdown_table(markup, table_id, caption, source=None):
    lines = markup.strip('\n').split('\n')

    blocks = 0
    in_block = False
    for line in lines:
        if _is_pipe_line(line):
            if not in_block:
                blocks += 1
            in_block = True
        elif line.strip():
            if in_block:
                raise MalformedInput("non-table line inside markdown table: %r" % line,
                                     source=source)
        else:
            in_block = False

    if blocks == 0:
        raise MalformedInput("no markdown table found", source=source)
    if blocks > 1:
        raise MultipleTables("expected one markdown table, found %s" % blocks)

    rows = []
    for i, line in enumerate(l for l in lines if _is_pipe_line(l)):
        if i == 1 and _SEPARATOR.match(line.strip()):
            continue
        rows.append(_split_pipe_row(line))

    report = ParseReport()
    rows = _pad_rows(rows, report)
    if report:
        logger.info("table %s: padded ragged rows %s" % (table_id, report.padded_rows))

    return Table(table_id, caption, _build_grid(rows, [], source), parse_report=report)


# html tables

class _HtmlTableParser(HTMLParser):
    """
    Collect rows of (content, rowspan, colspan) from html table markup
    """

    def __init__(self):
        super(_HtmlTableParser, self).__init__(convert_charrefs=True)
        self.tables = 0
        self.depth = 0
        self.rows = []
        self.row = None
        self.cell = None
        self.errors = []

    def handle_starttag(self, tag, attrs):
        if tag == 'table':
            self.tables += 1
            self.depth += 1
        elif tag == 'tr':
            if self.row is not None:
                self.errors.append("unclosed <tr> at line %s" % self.getpos()[0])
                self._close_row()
            self.row = []
        elif tag in ('td', 'th'):
            if self.cell is not None:
                self.errors.append("unclosed <%s> at line %s" % (tag, self.getpos()[0]))
                self._close_cell()
            attrs = dict(attrs)
            self.cell = {
                'text': [],
                'rowspan': self._span(attrs.get('rowspan')),
                'colspan': self._span(attrs.get('colspan')),
            }
        elif tag == 'br' and self.cell is not None:
            self.cell['text'].append(' ')

    def handle_endtag(self, tag):
        if tag == 'table':
            if self.depth == 0:
                self.errors.append("</table> without <table> at line %s" % self.getpos()[0])
            self.depth = max(0, self.depth - 1)
        elif tag == 'tr':
            if self.row is None:
                self.errors.append("</tr> without <tr> at line %s" % self.getpos()[0])
            else:
                self._close_row()
        elif tag in ('td', 'th'):
            if self.cell is None:
                self.errors.append("</%s> without <%s> at line %s" %
                                   (tag, tag, self.getpos()[0]))
            else:
                self._close_cell()

    def handle_data(self, data):
        if self.cell is not None:
            self.cell['text'].append(data)

    def _span(self, value):
        try:
            return max(1, int(value)) if value is not None else 1
        except ValueError:
            self.errors.append("bad span value %r at line %s" % (value, self.getpos()[0]))
            return 1

    def _close_cell(self):
        if self.row is None:
            self.errors.append("cell outside <tr> at line %s" % self.getpos()[0])
            self.row = []
        text = ' '.join(''.join(self.cell['text']).split())
        self.row.append((text, self.cell['rowspan'], self.cell['colspan']))
        self.cell = None

    def _close_row(self):
        if self.cell is not None:
            self._close_cell()
        self.rows.append(self.row)
        self.row = None

    def finish(self):
        self.close()
        if self.cell is not None:
            self.errors.append("unclosed <td>/<th>")
        if self.row is not None:
            self.errors.append("unclosed <tr>")
        if self.depth != 0:
            self.errors.append("unclosed <table>")


def _parse_html_table(markup, table_id, caption, source=None):
    parser = _HtmlTableParser()
    parser.feed(markup)
    parser.finish()

    if parser.tables == 0:
        raise MalformedInput("no html table found", source=source)
    if parser.tables > 1:
        raise MultipleTables("expected one html table, found %s" % parser.tables)
    if parser.errors:
        raise MalformedInput("unbalanced table markup: %s" % '; '.join(parser.errors),
                             source=source)

    # place cells on an occupancy map, skipping positions covered by earlier rowspans
    occupied = {}
    placed = []
    spans = []
    for r, row in enumerate(parser.rows):
        c = 0
        for text, rowspan, colspan in row:
            while (r, c) in occupied:
                c += 1
            for rr in range(r, r + rowspan):
                for cc in range(c, c + colspan):
                    occupied[(rr, cc)] = (r, c)
            placed.append((r, c, text))
            if rowspan > 1 or colspan > 1:
                spans.append(Span(r, c, rowspan, colspan))
            c += colspan

    n_rows = max([len(parser.rows)] + [rr + 1 for rr, _ in occupied])
    n_cols = max([cc + 1 for _, cc in occupied] or [0])

    rows = [[None] * n_cols for _ in range(n_rows)]
    for r, c, text in placed:
        rows[r][c] = text

    report = ParseReport()
    for r in range(n_rows):
        width = len([c for c in range(n_cols) if (r, c) in occupied])
        if width < n_cols:
            report.pad(r, width)
        rows[r] = [t if t is not None else '' for t in rows[r]]
    if report:
        logger.info("table %s: padded ragged rows %s" % (table_id, report.padded_rows))

    return Table(table_id, caption, _build_grid(rows, spans, source), spans=spans,
                 parse_report=report)


def parse_table(markup, format=MARKDOWN, table_id='t0', caption='', source=None):
    """
    Parse a single table from markdown pipe or html markup

    Parameters
    ----------
    markup : str
        text containing exactly one table
    format : str
        'markdown' or 'html-table'
    table_id : str
    caption : str

    Returns
    -------
    table : Table
        rectangular grid; html rowspan/colspan recorded as spans, markdown tables have none
    """
    if not markup or not markup.strip():
        raise MalformedInput("empty table markup", source=source)

    if format == MARKDOWN:
        return _parse_markdown_table(markup, table_id, caption, source)
    if format == HTML_TABLE:
        return _parse_html_table(markup, table_id, caption, source)

    raise MalformedInput("unknown table format '%s'" % format, source=source)


def serialize_table(table, format=MARKDOWN):
    """
    Render a table back into markup; parse_table inverts it

    Markdown has no merged cells, so spans only survive the html form.
    """
    contents = table.contents()

    if format == MARKDOWN:
        def row_line(row):
            return '| ' + ' | '.join(c.replace('|', '\\|').replace('\n', ' ') for c in row) + ' |'

        if not contents:
            return ''
        lines = [row_line(contents[0]), '|' + '|'.join(['---'] * table.n_cols) + '|']
        lines += [row_line(row) for row in contents[1:]]
        return '\n'.join(lines)

    if format == HTML_TABLE:
        lines = ['<table>']
        for r, row in enumerate(contents):
            cells = []
            for c, text in enumerate(row):
                if (r, c) in table.covered:
                    continue
                tag = 'th' if table.cell(r, c).is_header else 'td'
                span = table.span_at(r, c)
                attrs = ''
                if span and span.row_span > 1:
                    attrs += ' rowspan="%s"' % span.row_span
                if span and span.col_span > 1:
                    attrs += ' colspan="%s"' % span.col_span
                cells.append('<%s%s>%s</%s>' % (tag, attrs, escape(text), tag))
            lines.append('<tr>' + ''.join(cells) + '</tr>')
        lines.append('</table>')
        return '\n'.join(lines)

    raise MalformedInput("unknown table format '%s'" % format)


def _header_depth(flags):
    n = 0
    for flag in flags:
        if not flag:
            break
        n += 1
    return n


def classify_headers(table):
    """
    Annotate header cells with their type and tier

    Column headers are the topmost contiguous rows whose non-empty cells are all
    non-numeric (tier = row + 1); row headers are the leftmost such columns, judged
    below the header rows (tier = col + 1). Merged header cells propagate their
    annotation to every coordinate they cover.

    Sets table.category and RawCell.is_header in place.

    Parameters
    ----------
    table : Table

    Returns
    -------
    annotations : list of HeaderAnnotation
        sorted by coordinate
    """
    contents = table.contents()
    n_rows, n_cols = table.shape

    numeric = [[is_numeric(text) for text in row] for row in contents]

    if not any(any(row) for row in numeric):
        # nothing numeric at all: a plain text table
        n_header_rows = 1 if n_rows >= 2 else 0
        n_header_cols = 1 if n_cols >= 2 else 0
    else:
        n_header_rows = _header_depth([not any(row) for row in numeric])
        n_header_cols = _header_depth(
            [not any(numeric[r][c] for r in range(n_header_rows, n_rows)) for c in range(n_cols)])

    if n_header_rows == 0 and n_header_cols == 0:
        raise HeaderDetectionAmbiguous("table %s/%s: no header row or column detected" %
                                       (table.doc_id, table.table_id))

    return _annotate(table, n_header_rows, n_header_cols)


def default_headers(table):
    """
    Single-tier fallback for tables where header detection failed: row 0 becomes
    the tier-1 column header row (when there is more than one row).
    """
    n_header_rows = 1 if table.n_rows >= 2 else 0
    return _annotate(table, n_header_rows, 0)


def _annotate(table, n_header_rows, n_header_cols):

    def base(r, c):
        if r < n_header_rows:
            return COLUMN_HEADER, r + 1
        if c < n_header_cols:
            return ROW_HEADER, c + 1
        return None

    annotations = []
    for r in range(table.n_rows):
        for c in range(table.n_cols):
            origin = table.origin(r, c)
            kind = base(*origin)
            table.cell(r, c).is_header = kind is not None
            if kind is not None:
                annotations.append(HeaderAnnotation((r, c), kind[0], kind[1], origin))

    in_header = [s for s in table.spans if s.row < n_header_rows or s.col < n_header_cols]
    hierarchical = bool(in_header) or any(a.tier > 1 for a in annotations)
    two_d = n_header_rows > 0 and n_header_cols > 0

    if hierarchical:
        table.category = HIERARCHICAL_2D if two_d else HIERARCHICAL_1D
    else:
        table.category = FLAT_2D if two_d else FLAT_1D

    return annotations


def annotate_table(table):
    """classify_headers, falling back to the single-tier default"""
    try:
        return classify_headers(table)
    except HeaderDetectionAmbiguous as e:
        logger.warning("%s, using single-tier default" % e)
        return default_headers(table)


# documents

_HEADING = re.compile(r'^\s{0,3}#{1,6}\s+(.*?)\s*#*\s*$')
_BOLD_LINE = re.compile(r'^\s*(?:\*\*|__)(.+?)(?:\*\*|__)\s*:?\s*$')
_HTML_TABLE_START = re.compile(r'<table\b', re.IGNORECASE)
_HTML_TABLE_END = re.compile(r'</table\s*>', re.IGNORECASE)

# a caption line binds to a table starting at most this many lines below it
CAPTION_WINDOW = 2


def _slug(text):
    return re.sub(r'[^a-z0-9]+', '-', (text or '').lower()).strip('-')


def _parse_markdown_document(raw, doc_id=None, source=None):
    lines = raw.split('\n')

    title = ''
    first = next((i for i, line in enumerate(lines) if line.strip()), None)
    if first is not None:
        m = re.match(r'^\s*#\s+(.*?)\s*$', lines[first])
        if m:
            title = m.group(1)

    passages = []
    tables = []
    paragraph = []
    caption = None  # (line index, text)
    position = [0]

    def next_position():
        p = position[0]
        position[0] += 1
        return p

    def flush():
        if paragraph:
            text = ' '.join(l.strip() for l in paragraph)
            passages.append(Passage('p%s' % len(passages), text, next_position()))
            del paragraph[:]

    def bound_caption(start):
        if caption is not None and start - caption[0] <= CAPTION_WINDOW:
            return caption[1]
        return ''

    i = 0
    while i < len(lines):
        line = lines[i]

        if _HTML_TABLE_START.search(line):
            flush()
            start = i
            while i < len(lines) and not _HTML_TABLE_END.search(lines[i]):
                i += 1
            if i == len(lines):
                raise MalformedInput("unbalanced table markup: <table> never closed",
                                     source=source, line=start + 1)
            markup = '\n'.join(lines[start:i + 1])
            try:
                table = parse_table(markup, HTML_TABLE, 't%s' % len(tables),
                                    bound_caption(start), source=source)
            except MalformedInput as e:
                e.line = start + 1
                raise
            table.position = next_position()
            tables.append(table)
            i += 1
            continue

        if _is_pipe_line(line):
            flush()
            start = i
            while i < len(lines) and _is_pipe_line(lines[i]):
                i += 1
            markup = '\n'.join(lines[start:i])
            try:
                table = parse_table(markup, MARKDOWN, 't%s' % len(tables),
                                    bound_caption(start), source=source)
            except MalformedInput as e:
                e.line = start + 1
                raise
            table.position = next_position()
            tables.append(table)
            continue

        heading = _HEADING.match(line)
        bold = _BOLD_LINE.match(line)
        if heading or bold:
            flush()
            if i != first or not title:
                caption = (i, (heading or bold).group(1).strip())
        elif line.strip():
            paragraph.append(line)
        else:
            flush()
        i += 1
    flush()

    if not passages and not tables:
        raise EmptyDocument("document %s has no passages or tables" % (doc_id or source))

    doc_id = doc_id or _slug(title) or 'doc'
    return Document(doc_id, title, passages, tables)


def _require(record, key, kind, source):
    if key not in record:
        raise MalformedInput("missing field '%s'" % key, source=source)
    if not isinstance(record[key], kind):
        raise MalformedInput("field '%s' has wrong type %s" % (key, type(record[key]).__name__),
                             source=source)
    return record[key]


def document_from_record(record, source=None):
    """
    Build a Document from the structured-grid interchange schema

    {doc_id, title, passages:[{passage_id, text}], tables:[{table_id, caption,
    grid:[[text]], spans:[{row, col, row_span, col_span}]}]}

    Optional ``position`` fields order passages and tables; tables without one
    follow all passages. An optional ``entity`` carries a corpus annotation.
    """
    if not isinstance(record, dict):
        raise MalformedInput("document record must be an object", source=source)

    doc_id = str(_require(record, 'doc_id', (str, int), source))
    passages_in = record.get('passages') or []
    tables_in = record.get('tables') or []

    passages = []
    for i, p in enumerate(passages_in):
        text = _require(p, 'text', str, source)
        if not text.strip():
            raise MalformedInput("passage %s has empty text" % i, source=source)
        passages.append(Passage(str(p.get('passage_id', 'p%s' % i)), text,
                                p.get('position', i)))

    ids = [p.passage_id for p in passages]
    if len(set(ids)) != len(ids):
        raise MalformedInput("duplicate passage_id in %s" % doc_id, source=source)

    tables = []
    for i, t in enumerate(tables_in):
        grid = _require(t, 'grid', list, source)
        widths = set(len(row) for row in grid)
        if len(widths) > 1:
            raise MalformedInput("table %s: non-rectangular grid (row widths %s)" %
                                 (t.get('table_id', i), sorted(widths)), source=source)
        rows = [['' if v is None else str(v) for v in row] for row in grid]
        spans = [Span(int(s['row']), int(s['col']),
                      int(s.get('row_span', 1)), int(s.get('col_span', 1)))
                 for s in t.get('spans') or []]
        table = Table(str(t.get('table_id', 't%s' % i)), t.get('caption', ''),
                      _build_grid(rows, spans, source), spans=spans,
                      position=t.get('position', len(passages) + i))
        tables.append(table)

    if not passages and not tables:
        raise EmptyDocument("document %s has no passages or tables" % doc_id)

    return Document(doc_id, record.get('title', ''), passages, tables,
                    entity=record.get('entity', ''))


def document_to_record(doc):
    """inverse of document_from_record, positions and entity included"""
    return {
        'doc_id': doc.doc_id,
        'title': doc.title,
        'entity': doc.entity,
        'passages': [{'passage_id': p.passage_id, 'text': p.text, 'position': p.position}
                     for p in doc.passages],
        'tables': [{'table_id': t.table_id,
                    'caption': t.caption,
                    'position': t.position,
                    'grid': t.contents(),
                    'spans': [s._asdict() for s in t.spans]}
                   for t in doc.tables],
    }


def parse_document(raw, format=MARKDOWN, doc_id=None, source=None):
    """
    Parse a document into passages and tables

    Parameters
    ----------
    raw : str
        markdown text or a structured-grid json document
    format : str
        'markdown' or 'structured-grid'
    doc_id : str, optional
        markdown documents take their id from here, else from the title
    source : str, optional
        file name used in error messages

    Returns
    -------
    doc : Document
    """
    if raw is None or not raw.strip():
        raise EmptyDocument("empty input %s" % (source or ''))

    if format == MARKDOWN:
        return _parse_markdown_document(raw, doc_id, source)

    if format == STRUCTURED_GRID:
        try:
            record = json.loads(raw)
        except ValueError as e:
            raise MalformedInput("invalid json: %s" % e, source=source,
                                 line=getattr(e, 'lineno', None))
        return document_from_record(record, source)

    raise MalformedInput("unknown document format '%s'" % format, source=source)


def read_document(path):
    """parse a document file, choosing the format from its extension"""
    name, ext = os.path.splitext(os.path.basename(path))
    format = FILE_FORMATS.get(ext.lower())
    if format is None:
        raise MalformedInput("unsupported file type '%s'" % ext, source=path)

    with open(path, encoding='utf-8') as f:
        raw = f.read()

    return parse_document(raw, format, doc_id=name, source=path)
