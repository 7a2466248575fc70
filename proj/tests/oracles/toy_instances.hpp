// Generated by distortion_rate_oracle.py; do not edit.
#pragma once

#include <array>
#include <vector>

namespace anonsched::oracle {

struct ToyDistortionInstance {
  std::vector<double> prior;
  std::vector<std::vector<double>> distortion;
  std::vector<double> rates_bits;
  std::vector<double> expected_distortion;
};

inline const std::vector<ToyDistortionInstance>& toy_distortion_instances() {
  static const std::vector<ToyDistortionInstance> instances = {
      {{0.1600820889679907, 0.24230324164742928, 0.59761466938458},
       {{2.891, 1.027, 0.797}, {2.2, 2.75, 3.303}, {0.459, 2.965, 0.058}},
       {0.0, 0.204376, 0.545004, 1.021882},
       {0.9625746828932531, 0.8286535067247545, 0.7274209639507762, 0.6953142073614034}},
      {{0.4044619961536923, 0.5273069041705475, 0.06823109967576026},
       {{1.948, 1.014}, {2.872, 3.222}, {0.298, 2.772}},
       {0.0, 0.191901, 0.511736, 0.959505},
       {2.2982439176385556, 2.091785883842827, 1.9984395028908561, 1.945406823350259}},
      {{0.5010891775335949, 0.35742519070996204, 0.14148563175644324},
       {{2.718, 2.94, 3.445}, {1.571, 0.3, 3.366}, {2.121, 1.594, 1.917}},
       {0.0, 0.214381, 0.571683, 1.071905},
       {1.8059578361815283, 1.7640449542797856, 1.7201325001390777, 1.6947160387718978}},
      {{0.5212947007590201, 0.47870529924097993},
       {{3.84, 1.764, 3.584, 0.441}, {0.373, 0.84, 3.521, 2.994}},
       {0.0, 0.149804, 0.399476, 0.749018},
       {1.3216763035013346, 1.074838746212496, 0.8265253463860558, 0.5293175474020455}},
      {{0.06134424971903058, 0.7966402853961646, 0.14201546488480493},
       {{0.046, 0.579, 2.143}, {0.506, 3.059, 3.753}, {3.427, 1.462, 1.357}},
       {0.0, 0.136234, 0.36329, 0.681169},
       {0.8926088180577612, 0.7985640579161727, 0.6763761503761876, 0.5986368057520688}},
      {{0.8567814070896853, 0.14321859291031472},
       {{2.144, 2.363, 1.17}, {2.55, 0.5, 0.094}},
       {0.0, 0.088891, 0.237043, 0.444455},
       {1.0158967940285013, 1.0158967940399604, 1.0158967940440093, 1.0158967940310877}},
      {{0.24458953767590746, 0.053045020064985224, 0.7023654422591074},
       {{2.378, 1.798, 1.504}, {1.33, 1.858, 3.165}, {2.065, 1.267, 2.578}},
       {0.0, 0.161945, 0.431853, 0.809724},
       {1.4282266513643131, 1.4066740821520056, 1.3759414326392014, 1.3428307563134092}},
      {{0.739961849921082, 0.260038150078918},
       {{1.669, 1.143, 3.928, 2.085}, {2.517, 1.928, 1.636, 1.958}},
       {0.0, 0.124021, 0.330722, 0.620103},
       {1.3471299478119507, 1.3297118215966672, 1.3056953013274235, 1.2814815955765488}},
      {{0.728019153239554, 0.2719808467604461},
       {{0.001, 2.589}, {0.253, 0.668}},
       {0.0, 0.126644, 0.337717, 0.63322},
       {0.06953917338363241, 0.0695391734010162, 0.06953917338910232, 0.06953917339361737}},
      {{0.05275260115911251, 0.11436039402890942, 0.8328870048119781},
       {{1.986, 0.193}, {0.412, 3.406}, {2.698, 2.954}},
       {0.0, 0.120209, 0.320558, 0.601046},
       {2.399012287224625, 2.3404538891798157, 2.304426873344733, 2.304426873346277}},
  };
  return instances;
}

}  // namespace anonsched::oracle

