from .cli import main
from .report import emit_results, read_results, summarize_records

__all__ = ['main', 'emit_results', 'read_results', 'summarize_records']
