from django.urls import path

from .views import CueAPIView, LocateAPIView

urlpatterns = [
    path('v1/locate', LocateAPIView.as_view(), name='perception-locate'),
    path('v1/cue', CueAPIView.as_view(), name='perception-cue'),
]
