from __future__ import annotations

from django import forms

from .reports import parse_formats
from .services.seeds import MAX_SEED


class NumberListField(forms.Field):
    """Accepts a YAML list or a comma separated string."""

    def __init__(self, *, item_type=float, min_value=None, max_value=None, **kwargs):
        self.item_type = item_type
        self.min_value = min_value
        self.max_value = max_value
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, str):
            tokens = [token.strip() for token in value.split(",") if token.strip()]
        elif isinstance(value, (list, tuple)):
            tokens = list(value)
        else:
            tokens = [value]
        items = []
        for token in tokens:
            try:
                number = self.item_type(token)
            except (TypeError, ValueError):
                raise forms.ValidationError(f"Invalid number: {token!r}.")
            if self.item_type is int and isinstance(token, float) and token != number:
                raise forms.ValidationError(f"Expected an integer: {token!r}.")
            items.append(number)
        return items

    def validate(self, value):
        super().validate(value)
        for item in value:
            if self.min_value is not None and item < self.min_value:
                raise forms.ValidationError(f"{item} is below the minimum {self.min_value}.")
            if self.max_value is not None and item > self.max_value:
                raise forms.ValidationError(f"{item} is above the maximum {self.max_value}.")


class RunConfigForm(forms.Form):
    seed = forms.IntegerField(min_value=0, max_value=MAX_SEED)
    output_dir = forms.CharField()
    formats = forms.CharField()
    roster = forms.CharField(required=False)
    dataset_path = forms.CharField(required=False)

    campaigns_per_actor = forms.IntegerField(min_value=1)
    window_start = forms.DateField(input_formats=["%Y-%m-%d"])
    window_end = forms.DateField(input_formats=["%Y-%m-%d"])
    evasion_enabled = forms.BooleanField(required=False)
    evasion_override = forms.FloatField(required=False, min_value=0.0, max_value=1.0)

    decay_rate = forms.FloatField(min_value=0.0)
    similarity_threshold = forms.FloatField(min_value=0.0, max_value=1.0)
    confidence_threshold = forms.FloatField(min_value=0.0, max_value=1.0)
    min_train = forms.IntegerField(min_value=1)
    likelihood_slope = forms.FloatField(min_value=0.0, max_value=0.5)
    likelihood_floor = forms.FloatField(min_value=0.0, max_value=0.5)
    carry_prior = forms.BooleanField(required=False)

    pairs = forms.IntegerField(min_value=2)
    evasion_levels = NumberListField(min_value=0.0, max_value=1.0)
    trials = forms.IntegerField(min_value=1)
    min_train_values = NumberListField(item_type=int, min_value=1)
    workers = forms.IntegerField(min_value=1)

    def clean_formats(self):
        try:
            return parse_formats(self.cleaned_data.get("formats") or "")
        except ValueError as exc:
            raise forms.ValidationError(str(exc))

    def clean_likelihood_floor(self):
        value = self.cleaned_data.get("likelihood_floor")
        if value is not None and value <= 0.0:
            raise forms.ValidationError("Likelihood floor must be positive.")
        return value

    def clean(self):
        cleaned_data = super().clean()
        start = cleaned_data.get("window_start")
        end = cleaned_data.get("window_end")
        if start and end and start >= end:
            self.add_error("window_end", "window_end must be after window_start.")
        return cleaned_data
