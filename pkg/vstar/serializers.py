import math
from enum import Enum

from rest_framework import serializers

from .exceptions import DataError, GeometryError, HeatmapError
from .geometry import Rect
from .heatmap import FixationSequence, Heatmap
from .perception import PlantedTarget, SyntheticScene
from .search import (
    ChildPriority, CueKind, Outcome, OutcomeKind, SearchNode, SearchParams, SearchStep,
    SearchTrace, Strategy,
)


class RectField(serializers.Field):
    """A Rect written in corner form [x1, y1, x2, y2]."""

    default_error_messages = {
        'invalid': 'Expected [x1, y1, x2, y2] with non-negative integer corners, x2 > x1 and y2 > y1.',
    }

    def to_representation(self, value):
        return value.corners()

    def to_internal_value(self, data):
        if not isinstance(data, (list, tuple)) or len(data) != 4:
            self.fail('invalid')
        try:
            corners = [int(v) for v in data]
            if any(c != v for c, v in zip(corners, data)):
                self.fail('invalid')
            return Rect.from_corners(*corners)
        except (TypeError, ValueError, GeometryError):
            self.fail('invalid')


class EnumChoiceField(serializers.ChoiceField):
    """Choice of enum values, read back as enum members."""

    def __init__(self, enum, **kwargs):
        self.enum = enum
        super().__init__(choices=[member.value for member in enum], **kwargs)

    def to_representation(self, value):
        return value.value if isinstance(value, Enum) else value

    def to_internal_value(self, data):
        return self.enum(super().to_internal_value(data))


class PriorityField(serializers.FloatField):
    """The root's +inf priority is written as null."""

    def __init__(self, **kwargs):
        kwargs.setdefault('allow_null', True)
        super().__init__(**kwargs)

    def to_representation(self, value):
        if value is None or math.isinf(value):
            return None
        return float(value)


class HeatmapSerializer(serializers.Serializer):
    width = serializers.IntegerField(min_value=1)
    height = serializers.IntegerField(min_value=1)
    frame = RectField(required=False)
    values = serializers.ListField(child=serializers.FloatField())

    def to_representation(self, instance):
        return {
            'width': instance.width,
            'height': instance.height,
            'frame': instance.frame.corners(),
            'values': instance.to_list(),
        }

    def validate(self, attrs):
        if attrs['width'] * attrs['height'] != len(attrs['values']):
            raise serializers.ValidationError('width * height must equal the number of values.')
        if not all(math.isfinite(v) for v in attrs['values']):
            raise serializers.ValidationError('heatmap values must be finite.')
        return attrs

    def create(self, validated_data):
        frame = validated_data.get('frame') or self.context.get('frame')
        if frame is None:
            raise DataError('a heatmap needs a frame')
        try:
            return Heatmap.from_list(
                validated_data['width'], validated_data['height'], validated_data['values'], frame
            )
        except HeatmapError as exc:
            raise DataError(str(exc)) from exc


class SearchParamsSerializer(serializers.Serializer):
    high_conf = serializers.FloatField(default=0.5)
    low_conf = serializers.FloatField(default=0.3)
    delta_base = serializers.FloatField(default=6.0)
    delta_decay = serializers.FloatField(default=0.7)
    delta_floor = serializers.FloatField(default=3.0)
    min_side = serializers.IntegerField(default=224, min_value=1)

    def validate(self, attrs):
        if self.partial:
            return attrs
        try:
            SearchParams(**attrs)
        except DataError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data):
        return SearchParams(**validated_data)


class PlantedTargetSerializer(serializers.Serializer):
    name = serializers.CharField()
    box = RectField()
    detectability = serializers.FloatField(default=1.0, min_value=0.0, max_value=1.0)


class SceneSerializer(serializers.Serializer):
    extent = RectField()
    targets = PlantedTargetSerializer(many=True)
    context_regions = serializers.DictField(child=RectField(), default=dict)
    cue_fidelity = serializers.FloatField(default=1.0, min_value=0.0, max_value=1.0)
    noise_level = serializers.FloatField(default=0.0, min_value=0.0)
    seed = serializers.IntegerField(default=0, min_value=0)

    def validate(self, attrs):
        try:
            self._build(attrs)
        except DataError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def _build(self, attrs):
        return SyntheticScene(
            extent=attrs['extent'],
            targets=[PlantedTarget(**t) for t in attrs['targets']],
            context_regions=dict(attrs['context_regions']),
            cue_fidelity=attrs['cue_fidelity'],
            noise_level=attrs['noise_level'],
            seed=attrs['seed'],
        )

    def create(self, validated_data):
        return self._build(validated_data)


class FixationRecordSerializer(serializers.Serializer):
    image_id = serializers.CharField()
    extent = RectField()
    points = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    )
    target_box = RectField()
    target = serializers.CharField(default='target')

    def validate(self, attrs):
        if not attrs['extent'].contains(attrs['target_box']):
            raise serializers.ValidationError('target_box must lie inside extent.')
        try:
            attrs['fixations'] = FixationSequence(tuple(attrs['points']), attrs['extent'])
        except HeatmapError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class ChildPrioritySerializer(serializers.Serializer):
    patch = RectField()
    priority = PriorityField()


class StepSerializer(serializers.Serializer):
    patch = RectField(source='node.patch')
    level = serializers.IntegerField(source='node.level', min_value=0)
    priority = PriorityField(source='node.priority')
    cue_kind = EnumChoiceField(CueKind)
    confidence = serializers.FloatField(min_value=0.0, max_value=1.0)
    children = ChildPrioritySerializer(many=True)


class OutcomeSerializer(serializers.Serializer):
    kind = EnumChoiceField(OutcomeKind)
    box = RectField(allow_null=True)
    confidence = serializers.FloatField()
    step_index = serializers.IntegerField(allow_null=True)


class CountersSerializer(serializers.Serializer):
    locate_calls = serializers.IntegerField(min_value=0)
    cue_calls = serializers.IntegerField(min_value=0)


class TraceSerializer(serializers.Serializer):
    target = serializers.CharField()
    strategy = EnumChoiceField(Strategy)
    params = SearchParamsSerializer()
    steps = StepSerializer(many=True)
    outcome = OutcomeSerializer()
    counters = CountersSerializer()

    def create(self, validated_data):
        steps = []
        for index, step in enumerate(validated_data['steps']):
            node = step['node']
            priority = math.inf if node['priority'] is None else node['priority']
            children = [
                ChildPriority(c['patch'], math.inf if c['priority'] is None else c['priority'])
                for c in step['children']
            ]
            steps.append(SearchStep(
                index=index,
                node=SearchNode(node['patch'], node['level'], priority, index),
                cue_kind=CueKind(step['cue_kind']),
                confidence=step['confidence'],
                children=children,
            ))
        outcome = validated_data['outcome']
        return SearchTrace(
            target=validated_data['target'],
            params=SearchParams(**validated_data['params']),
            strategy=Strategy(validated_data['strategy']),
            steps=steps,
            outcome=Outcome(
                OutcomeKind(outcome['kind']), outcome['box'],
                outcome['confidence'], outcome['step_index'],
            ),
            locate_calls=validated_data['counters']['locate_calls'],
            cue_calls=validated_data['counters']['cue_calls'],
        )


class ImageRefSerializer(serializers.Serializer):
    name = serializers.CharField()
    extent = RectField()
    path = serializers.CharField(allow_null=True)


class SearchedTargetSerializer(serializers.Serializer):
    name = serializers.CharField()
    present = serializers.BooleanField()
    box = RectField(allow_null=True)
    crop = RectField(allow_null=True)
    confidence = serializers.FloatField(allow_null=True)


class VisualWorkingMemorySerializer(serializers.Serializer):
    question = serializers.CharField()
    global_image = ImageRefSerializer()
    searched_targets = SearchedTargetSerializer(many=True)
    target_locations = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))


class ProjectionChoiceSerializer(serializers.Serializer):
    global_projection = serializers.CharField(source='global_projection.value')
    target_projections = serializers.SerializerMethodField()
    visual_tokens = serializers.IntegerField()

    def get_target_projections(self, obj):
        return [p.value for p in obj.target_projections]


class ExperimentConfigSerializer(serializers.Serializer):
    n_scenes = serializers.IntegerField(min_value=1)
    extent = RectField()
    target_size_range = serializers.ListField(
        child=serializers.IntegerField(min_value=1), min_length=2, max_length=2
    )
    cue_fidelity = serializers.FloatField(min_value=0.0, max_value=1.0)
    noise_level = serializers.FloatField(min_value=0.0)
    strategies = serializers.ListField(
        child=EnumChoiceField(Strategy), min_length=1
    )
    seed = serializers.IntegerField(min_value=0)
    seeds = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1)
    params = SearchParamsSerializer()
    grid = serializers.IntegerField(min_value=1)

    def validate(self, attrs):
        if 'target_size_range' not in attrs:
            return attrs
        lo, hi = attrs['target_size_range']
        extent = attrs.get('extent', Rect(0, 0, 2048, 2048))
        if lo > hi:
            raise serializers.ValidationError('target_size_range must be (min, max).')
        if hi > min(extent.w, extent.h):
            raise serializers.ValidationError('target_size_range must fit inside extent.')
        return attrs


class StrategyRowSerializer(serializers.Serializer):
    strategy = serializers.CharField()
    mean_search_length = serializers.FloatField(allow_null=True)
    success_rate = serializers.FloatField()
    n_included = serializers.IntegerField()


class ComparisonSerializer(serializers.Serializer):
    better = serializers.CharField()
    worse = serializers.CharField()
    mean_difference = serializers.FloatField(allow_null=True)
    p_value = serializers.FloatField(allow_null=True)


class SceneRowSerializer(serializers.Serializer):
    scene = serializers.IntegerField()
    seed = serializers.IntegerField()
    target = serializers.CharField()
    target_box = RectField()
    lengths = serializers.DictField(child=serializers.FloatField(allow_null=True))
    outcomes = serializers.DictField(child=serializers.CharField())
    successes = serializers.DictField(child=serializers.FloatField())
    errors = serializers.DictField(child=serializers.CharField())


class ResultTableSerializer(serializers.Serializer):
    rows = StrategyRowSerializer(many=True)
    comparisons = ComparisonSerializer(many=True)


# Remote perception wire protocol.

class LocateRequestSerializer(serializers.Serializer):
    image = serializers.CharField(allow_null=True, required=False, default=None)
    patch = RectField()
    instruction = serializers.CharField()


class WireHeatmapSerializer(HeatmapSerializer):
    frame = None

    def to_representation(self, instance):
        return {
            'width': instance.width,
            'height': instance.height,
            'values': instance.to_list(),
        }


class LocateResponseSerializer(serializers.Serializer):
    box = RectField(allow_null=True)
    confidence = serializers.FloatField(min_value=0.0, max_value=1.0)
    heatmap = WireHeatmapSerializer()


class CueRequestSerializer(serializers.Serializer):
    patch = RectField()
    instruction = serializers.CharField()


class CueResponseSerializer(serializers.Serializer):
    text = serializers.CharField(allow_blank=True)
