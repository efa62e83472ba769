"""Aggregation of classified posts into geographic and temporal summaries."""
from .aggregate import (PERIODS, UNCLASSIFIED, StateTopicTable, TimeSeries, TrendBundle, build_bundle,
                        period_key, state_topic_distribution, temporal_counts, temporal_topic_counts)
from .charts import emit_charts
from .report import emit_report, load_bundle
from ..corpus import posts_per_user
