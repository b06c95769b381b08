"""Event sensing and filtering for social-media post streams.

Turns raw post streams into spatio-temporal event descriptions: keyword
time-series triggers, configurable media-quality pipelines, gazetteer
geolocation, execution-order optimization, and per-region aggregation.
"""

__version__ = "0.1.0"
